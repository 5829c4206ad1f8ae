#include "langgrid/game.hpp"

#include <sstream>

#include "langgrid/error.hpp"

namespace langgrid {

int EpisodeSpec::resolved_grid() const {
  if (grid != 0) return grid;
  return env == EnvKind::rtfm ? 8 : 10;
}

namespace {

rtfm::Config rtfm_config(const EpisodeSpec& s) {
  rtfm::Config c;
  c.stage = s.stage;
  c.n_agents = s.n_agents;
  c.grid = s.resolved_grid();
  c.split = s.split;
  return c;
}

messenger::Config messenger_config(const EpisodeSpec& s) {
  messenger::Config c;
  c.stage = s.stage;
  c.n_agents = s.n_agents;
  c.grid = s.resolved_grid();
  c.split = s.split;
  return c;
}

}  // namespace

void EpisodeSpec::validate() const {
  if (env == EnvKind::rtfm) {
    rtfm_config(*this).validate();
  } else {
    messenger_config(*this).validate();
  }
}

Episode::Episode(const EpisodeSpec& spec, const text::Resources& resources)
    : spec_(spec), dynamics_(0) {
  spec_.grid = spec.resolved_grid();
  spec_.validate();
  const Rng root(spec.seed);
  Rng spawn = root.child("spawn");
  Rng manual_rng = root.child("manual");
  std::string digest;
  if (spec.env == EnvKind::rtfm) {
    auto [state, assignment] = rtfm::generate(rtfm_config(spec_), resources, spawn);
    manual_ = text::render_rtfm_manual(assignment, spec.stage, *resources.corpus, manual_rng);
    digest = assignment.digest();
    state_ = std::move(state);
    dynamics_ = root.child("monster-move");
  } else {
    auto [state, assignment] = messenger::generate(messenger_config(spec_), resources, spawn);
    manual_ = text::render_messenger_manual(assignment, spec.stage, spec.split, resources,
                                            manual_rng);
    digest = assignment.digest();
    state_ = std::move(state);
    dynamics_ = root.child("entity-move");
  }
  transcript_.header = TranscriptHeader{spec_.env,      spec_.stage, spec_.split, spec_.grid,
                                        spec_.n_agents, spec_.seed,  digest};
}

StepOutcome Episode::step(std::span<const Action> joint_action) {
  StepOutcome out;
  if (auto* s = std::get_if<rtfm::State>(&state_)) {
    auto r = rtfm::step(*s, joint_action, dynamics_);
    out = {std::move(r.rewards), r.done, r.win, std::move(r.events)};
  } else {
    auto r = messenger::step(std::get<messenger::State>(state_), joint_action, dynamics_);
    out = {std::move(r.rewards), r.done, r.win, std::move(r.events)};
  }
  StepRecord rec;
  rec.t = step_count();
  rec.actions.assign(joint_action.begin(), joint_action.end());
  rec.rewards = out.rewards;
  for (const Event& e : out.events) rec.events.push_back(e.token());
  rec.done = out.done;
  rec.win = out.win;
  transcript_.steps.push_back(std::move(rec));
  return out;
}

Observation Episode::observe(int agent) const {
  if (agent < 0 || agent >= spec_.n_agents) throw PreconditionError("observe: bad agent index");
  Observation o;
  o.agent = agent;
  if (const auto* s = std::get_if<rtfm::State>(&state_)) {
    o.text = rtfm::render_grid(*s, agent);
    o.inventory = rtfm::inventory_text(*s, agent);
  } else {
    const auto& m = std::get<messenger::State>(state_);
    o.symbols = messenger::render_symbols(m, agent);
    o.has_message = m.agents[static_cast<std::size_t>(agent)].has_message;
  }
  return o;
}

std::string Episode::render() const {
  std::ostringstream os;
  const Observation o = observe(0);
  const int g = spec_.grid;
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      os << (c ? " | " : "");
      std::string cell;
      if (is_rtfm()) {
        for (const auto& w : o.text[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) {
          cell += (cell.empty() ? "" : "+") + w;
        }
      } else {
        for (int sym : o.symbols[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) {
          cell += (cell.empty() ? "" : "+") + std::to_string(sym);
        }
      }
      os << (cell.empty() ? "." : cell);
    }
    os << '\n';
  }
  return os.str();
}

bool Episode::done() const {
  return std::visit([](const auto& s) { return s.done; }, state_);
}

bool Episode::win() const {
  return std::visit([](const auto& s) { return s.win; }, state_);
}

int Episode::step_count() const {
  return std::visit([](const auto& s) { return s.step; }, state_);
}

double Episode::episode_return(int agent) const {
  return std::visit([&](const auto& s) { return s.episode_return(agent); }, state_);
}

std::vector<GridPos> Episode::agent_positions() const {
  std::vector<GridPos> out;
  std::visit(
      [&](const auto& s) {
        for (const AgentState& a : s.agents) out.push_back(a.pos);
      },
      state_);
  return out;
}

}  // namespace langgrid
