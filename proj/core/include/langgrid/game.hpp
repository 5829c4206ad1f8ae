#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "langgrid/manual.hpp"
#include "langgrid/messenger.hpp"
#include "langgrid/rtfm.hpp"
#include "langgrid/transcript.hpp"

namespace langgrid {

struct EpisodeSpec {
  EnvKind env = EnvKind::rtfm;
  Stage stage{1};
  Split split = Split::train;
  int grid = 0;  // 0 selects the environment default (8 for RTFM, 10 for MESSENGER)
  int n_agents = 2;
  std::uint64_t seed = 0;

  int resolved_grid() const;
  /// Throws ConfigError for an invalid combination.
  void validate() const;
};

/// What one agent sees. RTFM fills `text`, MESSENGER fills `symbols`.
struct Observation {
  int agent = 0;
  TextGrid text;
  std::vector<std::vector<std::vector<int>>> symbols;
  std::string inventory;  // RTFM only
  bool has_message = false;
};

struct StepOutcome {
  std::vector<double> rewards;
  bool done = false;
  bool win = false;
  std::vector<Event> events;
};

/// One seeded episode of either environment. Randomness is drawn from labelled
/// child streams of the episode seed: "spawn" for generation, "manual" for the
/// manual and "monster-move" / "entity-move" for dynamics.
class Episode {
 public:
  explicit Episode(const EpisodeSpec& spec,
                   const text::Resources& resources = text::Resources::builtin());

  StepOutcome step(std::span<const Action> joint_action);

  const EpisodeSpec& spec() const { return spec_; }
  const text::Manual& manual() const { return manual_; }
  const Transcript& transcript() const { return transcript_; }
  Observation observe(int agent) const;
  /// Text rendering of the whole grid from agent 0's point of view, one row per line.
  std::string render() const;

  bool done() const;
  bool win() const;
  int step_count() const;
  int n_agents() const { return spec_.n_agents; }
  double episode_return(int agent) const;
  std::vector<GridPos> agent_positions() const;

  bool is_rtfm() const { return std::holds_alternative<rtfm::State>(state_); }
  const rtfm::State& rtfm_state() const { return std::get<rtfm::State>(state_); }
  const messenger::State& messenger_state() const { return std::get<messenger::State>(state_); }

 private:
  EpisodeSpec spec_;
  std::variant<rtfm::State, messenger::State> state_;
  text::Manual manual_;
  Transcript transcript_;
  Rng dynamics_;
};

}  // namespace langgrid
