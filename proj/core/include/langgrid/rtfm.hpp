#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langgrid/rng.hpp"
#include "langgrid/splits.hpp"
#include "langgrid/types.hpp"

namespace langgrid::rtfm {

struct Config {
  Stage stage{1};
  int n_agents = 2;
  int grid = 8;
  int max_steps = 1000;
  double step_penalty = -0.02;
  double chase_prob = 0.6;
  Split split = Split::train;

  /// Throws ConfigError. Grid 10 is reserved for the eval split (10x10 evaluation).
  void validate() const;

  bool has_distractors() const { return stage.value >= 2; }
  bool monsters_move() const { return stage.value >= 3; }
  bool one_to_one() const { return stage.value <= 3; }
  bool templated() const { return stage.value >= 5; }
};

/// The sampled dynamics of one episode.
struct Assignment {
  std::vector<text::WordPair> monster_team;      // every monster the manual describes
  std::vector<text::WordPair> modifier_element;  // every modifier the manual describes
  std::string target_team;
  std::vector<int> target_monsters;  // entity uids, one per agent
  std::vector<int> correct_items;    // correct_items[k] beats target_monsters[k]
  std::optional<int> distractor_monster;
  std::optional<int> distractor_item;
  bool one_to_one = true;

  std::optional<std::string> team_of(const std::string& monster) const;
  bool beats(const std::string& modifier, const std::string& element) const;
  std::string canonical() const;
  std::string digest() const;
};

/// Exact reward bookkeeping for one agent. The return is evaluated from the
/// counts, never by accumulating per-step floats.
struct RewardLedger {
  int kills = 0;
  int losses = 0;
  int steps = 0;

  double total(double step_penalty) const {
    return static_cast<double>(kills) - static_cast<double>(losses) +
           step_penalty * static_cast<double>(steps);
  }
};

struct State {
  Config config;
  Assignment assignment;
  std::vector<Entity> entities;  // indexed by uid
  std::vector<AgentState> agents;
  std::vector<RewardLedger> ledgers;
  int step = 0;
  bool done = false;
  bool win = false;

  GridSize grid_size() const { return {config.grid, config.grid}; }
  const Entity& entity(int uid) const { return entities.at(static_cast<std::size_t>(uid)); }
  std::vector<int> live_entities() const;
  std::vector<int> alive_targets() const;
  /// Modifier of the item `agent` holds beats the element of `monster`.
  bool effective(const AgentState& agent, const Entity& monster) const;
  double episode_return(int agent) const;
};

struct StepResult {
  std::vector<double> rewards;
  bool done = false;
  bool win = false;
  std::vector<Event> events;
};

std::pair<State, Assignment> generate(const Config& config, const text::Resources& resources,
                                      Rng& rng);

/// Turn order: agent moves, pickups, combat, monster moves, step penalty, terminal checks.
StepResult step(State& state, std::span<const Action> joint_action, Rng& rng);

/// Chase with probability chase_prob (greedy toward the nearest agent), otherwise a
/// uniformly random direction. Requires at least one agent.
Action monster_direction(GridPos monster, std::span<const GridPos> agents, double chase_prob,
                         Rng& rng);

/// Matrix of texts as seen by `viewer`: entity names, "you" for the viewer, "ally"
/// for every other agent.
TextGrid render_grid(const State& state, int viewer);
std::string inventory_text(const State& state, int agent);

}  // namespace langgrid::rtfm
