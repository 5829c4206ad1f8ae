#include "langgrid/messenger.hpp"

#include <algorithm>
#include <sstream>

#include "langgrid/error.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::messenger {

void Config::validate() const {
  if (stage.value < 1 || stage.value > 3) throw ConfigError("messenger: stage must be S1..S3");
  if (n_agents < 1 || n_agents > 2) throw ConfigError("messenger: supports one or two agents");
  if (grid != 10) throw ConfigError("messenger: grid must be 10");
  if (split == Split::eval_new) throw ConfigError("messenger: no eval_new split");
  if (start_without_message_prob < 0.0 || start_without_message_prob > 1.0) {
    throw ConfigError("messenger: start probability outside [0,1]");
  }
}

int Config::step_limit() const {
  switch (stage.value) {
    case 1: return 4;
    case 2: return 32;
    default: return 64;
  }
}

std::string RoleAssignment::canonical() const {
  std::ostringstream os;
  os << "with_messages=" << start_with_messages << ";";
  for (const PlacedEntity& e : entities) {
    os << e.name << '/' << e.symbol << '/' << to_string(e.role) << '/' << to_string(e.movement)
       << ',';
  }
  return os.str();
}

std::string RoleAssignment::digest() const { return hex64(fnv1a64(canonical())); }

GridPos center(GridSize grid) { return {grid.height / 2, grid.width / 2}; }

std::array<GridPos, 5> candidate_locations(GridSize grid) {
  const GridPos c = center(grid);
  return {GridPos{c.row - 2, c.col - 2}, GridPos{c.row - 2, c.col + 2},
          GridPos{c.row + 2, c.col - 2}, GridPos{c.row + 2, c.col + 2},
          GridPos{c.row - 3, c.col}};
}

namespace {

int symbol_of(const std::string& name) {
  const auto& names = text::messenger_entities();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw GenerationError("messenger: unknown entity '" + name + "'");
  return text::kFirstEntitySymbol + static_cast<int>(it - names.begin());
}

std::string pick_unused(const std::vector<std::string>& pool, std::vector<std::string>& used,
                        Rng& rng) {
  std::vector<std::string> free;
  for (const auto& p : pool) {
    if (std::find(used.begin(), used.end(), p) == used.end()) free.push_back(p);
  }
  if (free.empty()) throw GenerationError("messenger: split has too few entities for a role");
  std::string out = free[static_cast<std::size_t>(rng.below(free.size()))];
  used.push_back(out);
  return out;
}

}  // namespace

State make_state(const Config& config, RoleAssignment assignment,
                 std::span<const GridPos> positions) {
  config.validate();
  if (positions.size() != assignment.entities.size()) {
    throw PreconditionError("messenger: one position per entity required");
  }
  State s;
  s.config = config;
  const GridSize gs = s.grid_size();
  for (std::size_t i = 0; i < assignment.entities.size(); ++i) {
    const PlacedEntity& p = assignment.entities[i];
    if (!gs.contains(positions[i])) throw PreconditionError("messenger: entity off-grid");
    s.entities.push_back(Entity{static_cast<int>(i), p.symbol, p.name,
                                MessengerTags{p.role, p.movement}, positions[i], true});
  }
  for (int i = 0; i < config.n_agents; ++i) {
    s.agents.push_back(
        AgentState{i, center(gs), std::nullopt, assignment.start_with_messages, true});
  }
  s.credited.assign(static_cast<std::size_t>(config.n_agents), std::nullopt);
  s.finished.assign(static_cast<std::size_t>(config.n_agents), false);
  s.ledgers.assign(static_cast<std::size_t>(config.n_agents), RewardLedger{});
  s.assignment = std::move(assignment);
  return s;
}

std::pair<State, RoleAssignment> generate(const Config& config, const text::Resources& resources,
                                          Rng& rng) {
  config.validate();
  const text::MessengerSplitSets& sets = resources.splits.messenger(config.split);
  const GridSize gs{config.grid, config.grid};
  auto cells = candidate_locations(gs);
  if (cells.size() < 5) throw GenerationError("messenger: fewer than five candidate locations");

  RoleAssignment a;
  std::vector<std::string> used;
  const Role roles[] = {Role::enemy, Role::message, Role::message, Role::goal, Role::goal};
  for (Role r : roles) {
    const std::string name = pick_unused(sets.entities_with(r), used, rng);
    a.entities.push_back(PlacedEntity{name, symbol_of(name), r, Movement::stationary});
  }
  for (PlacedEntity& e : a.entities) {
    switch (config.stage.value) {
      case 1: e.movement = Movement::stationary; break;
      case 2: e.movement = Movement::random; break;
      default: {
        static constexpr Movement kS3[] = {Movement::stationary, Movement::chasing,
                                           Movement::fleeing};
        e.movement = kS3[rng.below(3)];
      }
    }
  }
  a.start_with_messages =
      config.stage.value <= 2 && !rng.bernoulli(config.start_without_message_prob);

  rng.shuffle(std::span<GridPos>(cells.data(), cells.size()));
  State s = make_state(config, a, cells);
  return {std::move(s), std::move(a)};
}

Action entity_move(const Entity& entity, std::span<const GridPos> agents, GridSize grid,
                   Rng& rng) {
  switch (entity.messenger().movement) {
    case Movement::stationary: return Action::stay;
    case Movement::random:
      return kMoveActions[static_cast<std::size_t>(rng.below(kMoveActions.size()))];
    case Movement::chasing: {
      const auto nearest = nearest_index(entity.pos, agents);
      return nearest ? greedy_step_toward(entity.pos, agents[*nearest]) : Action::stay;
    }
    case Movement::fleeing: {
      if (agents.empty()) return Action::stay;
      auto distance_after = [&](Action a) {
        GridPos p = entity.pos;
        switch (a) {
          case Action::up: --p.row; break;
          case Action::down: ++p.row; break;
          case Action::left: --p.col; break;
          case Action::right: ++p.col; break;
          case Action::stay: break;
        }
        if (!grid.contains(p)) return -1;
        int best = manhattan(p, agents.front());
        for (const GridPos& q : agents) best = std::min(best, manhattan(p, q));
        return best;
      };
      Action best = Action::stay;
      int best_d = -1;
      for (Action a : kAllActions) {
        const int d = distance_after(a);
        if (d > best_d) {
          best = a;
          best_d = d;
        }
      }
      return best;
    }
  }
  return Action::stay;
}

StepResult step(State& s, std::span<const Action> joint_action, Rng& rng) {
  if (s.done) throw EpisodeError("messenger: episode already finished");
  if (joint_action.size() != s.agents.size()) {
    throw EpisodeError("messenger: expected " + std::to_string(s.agents.size()) +
                       " actions, got " + std::to_string(joint_action.size()));
  }
  const GridSize gs = s.grid_size();
  const std::size_t n = s.agents.size();
  const bool s3 = s.config.stage.value >= 3;
  const std::vector<RewardLedger> before = s.ledgers;
  StepResult result;
  ++s.step;

  for (std::size_t i = 0; i < n; ++i) {
    s.agents[i].pos = apply_move(s.agents[i].pos, joint_action[i], gs);
  }

  bool lost = false;
  // Enemy contact resolves before any delivery in the same tick.
  for (const AgentState& agent : s.agents) {
    for (const Entity& e : s.entities) {
      if (e.alive && e.messenger().role == Role::enemy && e.pos == agent.pos) {
        result.events.push_back({"enemy", agent.id, e.uid});
        lost = true;
        break;
      }
    }
    if (lost) break;
  }

  if (!lost) {
    for (AgentState& agent : s.agents) {
      const std::size_t i = static_cast<std::size_t>(agent.id);
      for (Entity& e : s.entities) {
        if (lost) break;
        if (!e.alive || e.pos != agent.pos || s.finished[i]) continue;
        const Role role = e.messenger().role;
        if (role == Role::message) {
          if (agent.has_message) continue;
          agent.has_message = true;
          e.alive = false;
          result.events.push_back({"message", agent.id, e.uid});
          if (s3) {
            ++s.ledgers[i].pickups;
          } else {
            s.credited[i] = e.uid;
            s.finished[i] = true;
          }
        } else if (role == Role::goal) {
          if (!agent.has_message) {
            result.events.push_back({"goal_without_message", agent.id, e.uid});
            lost = true;
            break;
          }
          agent.has_message = false;
          s.credited[i] = e.uid;
          s.finished[i] = true;
          result.events.push_back({"deliver", agent.id, e.uid});
        }
      }
      if (lost) break;
    }
  }

  if (lost) {
    s.done = true;
  } else if (std::all_of(s.finished.begin(), s.finished.end(), [](bool f) { return f; })) {
    bool distinct = true;
    if (!s3) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) distinct &= s.credited[i] != s.credited[j];
      }
    }
    if (distinct) {
      s.done = true;
      s.win = true;
    }
  }

  if (!s.done) {
    std::vector<GridPos> agent_pos;
    for (const AgentState& a : s.agents) agent_pos.push_back(a.pos);
    for (Entity& e : s.entities) {
      if (!e.alive) continue;
      e.pos = apply_move(e.pos, entity_move(e, agent_pos, gs, rng), gs);
    }
    if (s.step >= s.config.step_limit()) {
      s.done = true;
      lost = true;
      result.events.push_back({"timeout", -1, -1});
    }
  }

  if (s.done) {
    for (RewardLedger& l : s.ledgers) l.outcome = s.win ? 1 : -1;
    result.events.push_back({s.win ? "win" : "lose", -1, -1});
  }

  result.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RewardLedger& now = s.ledgers[i];
    const RewardLedger& was = before[i];
    const int pickups = now.pickups - was.pickups;
    const int outcome = now.outcome - was.outcome;
    result.rewards[i] = 0.2 * static_cast<double>(pickups) + static_cast<double>(outcome);
  }
  result.done = s.done;
  result.win = s.win;
  return result;
}

std::vector<std::vector<std::vector<int>>> render_symbols(const State& s, int viewer) {
  const int g = s.config.grid;
  std::vector<std::vector<std::vector<int>>> grid(
      static_cast<std::size_t>(g), std::vector<std::vector<int>>(static_cast<std::size_t>(g)));
  for (const Entity& e : s.entities) {
    if (!e.alive) continue;
    grid[static_cast<std::size_t>(e.pos.row)][static_cast<std::size_t>(e.pos.col)].push_back(
        e.symbol);
  }
  for (const AgentState& a : s.agents) {
    int sym;
    if (a.id == viewer) {
      sym = a.has_message ? text::kSymbolSelfWithMessage : text::kSymbolSelf;
    } else {
      sym = a.has_message ? text::kSymbolAllyWithMessage : text::kSymbolAlly;
    }
    grid[static_cast<std::size_t>(a.pos.row)][static_cast<std::size_t>(a.pos.col)].push_back(sym);
  }
  return grid;
}

}  // namespace langgrid::messenger
