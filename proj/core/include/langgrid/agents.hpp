#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "langgrid/game.hpp"
#include "langgrid/messenger.hpp"
#include "langgrid/rng.hpp"
#include "langgrid/rtfm.hpp"
#include "langgrid/types.hpp"

namespace langgrid::agents {

// ---- shortest paths ----

inline constexpr int kUnreachable = std::numeric_limits<int>::max() / 4;

/// Cell costs for one path query. Blocked cells are never entered; soft cells
/// cost `soft_penalty` extra to enter. The goal cell itself is never soft.
struct CostMap {
  GridSize grid;
  std::vector<bool> blocked;  // row-major
  std::vector<bool> soft;
  int step_cost = 1;
  int soft_penalty = 0;

  explicit CostMap(GridSize g);
  void block(GridPos p);
  /// Marks p's 4-neighbourhood and p itself soft.
  void soften_around(GridPos p);
  bool is_blocked(GridPos p) const;
};

/// Step cost 1000 and soft penalty 1: shortest paths only, fewest soft cells among them.
CostMap lexicographic(GridSize g);
/// Step cost 1 and soft penalty `detour`: accepts up to `detour` extra steps per soft cell avoided.
CostMap detouring(GridSize g, int detour);

struct PathStep {
  Action action = Action::stay;
  int cost = kUnreachable;   // total weighted cost, kUnreachable when no path
  int length = kUnreachable;  // number of moves along the chosen path
};

/// First move of a cheapest path (ties: up, down, left, right). At the goal: stay, cost 0.
PathStep first_step(const CostMap& costs, GridPos from, GridPos to);

// ---- plans ----

struct AgentPlan {
  std::vector<GridPos> waypoints;  // remaining waypoints, nearest first
  std::vector<int> targets;        // entity uid per waypoint
  Action action = Action::stay;
};

/// Per-agent waypoint lists plus the joint action derived from them.
struct Plan {
  std::vector<AgentPlan> agents;
  std::vector<Action> joint() const;
};

/// Assigns agents to tasks minimising the summed cost among assignments that
/// cover the most tasks. cost[a][t] >= kUnreachable means incompatible. Exhaustive
/// for up to three agents (first minimum in lexicographic agent order); greedy
/// cheapest pair first otherwise (ties: lower agent, then lower task).
std::vector<int> match(const std::vector<std::vector<int>>& cost);

Plan plan_rtfm(const rtfm::State& state);
Plan plan_messenger(const messenger::State& state);

std::vector<Action> oracle_rtfm(const rtfm::State& state);
std::vector<Action> oracle_messenger(const messenger::State& state);

// ---- policies and evaluation ----

/// Joint-action policy. The rng is the policy's own per-episode stream.
using Policy = std::function<std::vector<Action>(const Episode&, Rng&)>;

std::vector<Action> oracle(const Episode& episode, Rng& rng);
std::vector<Action> random_actions(const Episode& episode, Rng& rng);
std::vector<Action> stay_actions(const Episode& episode, Rng& rng);

/// "oracle", "random" or "stay". Unknown names throw ConfigError.
Policy policy_by_name(std::string_view name);

struct EvalReport {
  int episodes = 0;
  int wins = 0;
  double win_rate = 0.0;
  double mean_return = 0.0;  // over agents and episodes
  double mean_length = 0.0;
  std::vector<std::string> loss_events;  // event counts of losing episodes, "name=count"

  std::string to_text() const;
};

/// Runs `episodes` episodes; episode i uses seed derive_seed(seed, "episode", i) and
/// policy stream Rng(seed).child("policy", i). Pure in (policy, base, episodes, seed).
EvalReport evaluate(const Policy& policy, const EpisodeSpec& base, int episodes,
                    std::uint64_t seed);

/// Drives one episode to completion and returns it.
Episode run_episode(const Policy& policy, const EpisodeSpec& spec, Rng& policy_rng);

}  // namespace langgrid::agents
