#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langgrid/rng.hpp"
#include "langgrid/splits.hpp"
#include "langgrid/types.hpp"

namespace langgrid::messenger {

struct Config {
  Stage stage{1};
  int n_agents = 2;
  int grid = 10;
  double start_without_message_prob = 0.8;
  Split split = Split::train;

  /// Throws ConfigError. At most two agents: each needs its own message and goal.
  void validate() const;
  /// 4 / 32 / 64 steps for S1 / S2 / S3.
  int step_limit() const;
};

struct PlacedEntity {
  std::string name;
  int symbol = 0;
  Role role = Role::enemy;
  Movement movement = Movement::stationary;
};

/// Roles and movement of the five placed entities (uid order: enemy, message,
/// message, goal, goal). The name<->symbol binding lives here and in the manual,
/// never in observations.
struct RoleAssignment {
  std::vector<PlacedEntity> entities;
  bool start_with_messages = false;

  std::string canonical() const;
  std::string digest() const;
};

struct RewardLedger {
  int pickups = 0;  // S3 message pickups, +0.2 each
  int outcome = 0;  // +1 win, -1 loss, 0 while running

  double total() const { return 0.2 * static_cast<double>(pickups) + static_cast<double>(outcome); }
};

struct State {
  Config config;
  RoleAssignment assignment;
  std::vector<Entity> entities;
  std::vector<AgentState> agents;
  std::vector<std::optional<int>> credited;  // entity each agent was credited with
  std::vector<bool> finished;
  std::vector<RewardLedger> ledgers;
  int step = 0;
  bool done = false;
  bool win = false;

  GridSize grid_size() const { return {config.grid, config.grid}; }
  const Entity& entity(int uid) const { return entities.at(static_cast<std::size_t>(uid)); }
  double episode_return(int agent) const { return ledgers.at(static_cast<std::size_t>(agent)).total(); }
};

struct StepResult {
  std::vector<double> rewards;
  bool done = false;
  bool win = false;
  std::vector<Event> events;
};

/// The five spawn cells for a grid; every S1 cell is reachable from the centre
/// within four steps without crossing another spawn cell.
std::array<GridPos, 5> candidate_locations(GridSize grid);
GridPos center(GridSize grid);

std::pair<State, RoleAssignment> generate(const Config& config, const text::Resources& resources,
                                          Rng& rng);

/// Builds a state from an explicit layout (uid order as in RoleAssignment).
State make_state(const Config& config, RoleAssignment assignment,
                 std::span<const GridPos> positions);

StepResult step(State& state, std::span<const Action> joint_action, Rng& rng);

/// Stationary: stay. Random: uniform over the four directions. Chasing: greedy step
/// toward the nearest agent. Fleeing: the legal move (up, down, left, right, stay in
/// that preference order) maximising distance to the nearest agent.
Action entity_move(const Entity& entity, std::span<const GridPos> agents, GridSize grid, Rng& rng);

/// Symbol-id grid as seen by `viewer`; no entity names appear.
std::vector<std::vector<std::vector<int>>> render_symbols(const State& state, int viewer);

}  // namespace langgrid::messenger
