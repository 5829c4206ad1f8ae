#include "langgrid/rtfm.hpp"

#include <algorithm>
#include <sstream>

#include "langgrid/error.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::rtfm {

void Config::validate() const {
  if (stage.value < 1 || stage.value > 5) throw ConfigError("rtfm: stage must be S1..S5");
  if (n_agents < 1) throw ConfigError("rtfm: need at least one agent");
  if (grid != 8 && grid != 10) throw ConfigError("rtfm: grid must be 8 or 10");
  if (grid == 10 && split != Split::eval) {
    throw ConfigError("rtfm: the 10x10 grid is only used with the eval split");
  }
  if (max_steps < 1) throw ConfigError("rtfm: max_steps must be positive");
  if (chase_prob < 0.0 || chase_prob > 1.0) throw ConfigError("rtfm: chase_prob outside [0,1]");
}

std::optional<std::string> Assignment::team_of(const std::string& monster) const {
  for (const auto& [m, t] : monster_team) {
    if (m == monster) return t;
  }
  return std::nullopt;
}

bool Assignment::beats(const std::string& modifier, const std::string& element) const {
  return std::find(modifier_element.begin(), modifier_element.end(),
                   text::WordPair{modifier, element}) != modifier_element.end();
}

std::string Assignment::canonical() const {
  auto mt = monster_team;
  auto me = modifier_element;
  std::sort(mt.begin(), mt.end());
  std::sort(me.begin(), me.end());
  std::ostringstream os;
  os << "target=" << target_team << ";teams=";
  for (const auto& [m, t] : mt) os << m << '/' << t << ',';
  os << ";beats=";
  for (const auto& [m, e] : me) os << m << '/' << e << ',';
  os << ";targets=";
  for (int u : target_monsters) os << u << ',';
  os << ";items=";
  for (int u : correct_items) os << u << ',';
  os << ";distractors=" << distractor_monster.value_or(-1) << ',' << distractor_item.value_or(-1)
     << ";one_to_one=" << one_to_one;
  return os.str();
}

std::string Assignment::digest() const { return hex64(fnv1a64(canonical())); }

std::vector<int> State::live_entities() const {
  std::vector<int> out;
  for (const Entity& e : entities) {
    if (e.alive) out.push_back(e.uid);
  }
  return out;
}

std::vector<int> State::alive_targets() const {
  std::vector<int> out;
  for (int uid : assignment.target_monsters) {
    if (entity(uid).alive) out.push_back(uid);
  }
  return out;
}

bool State::effective(const AgentState& agent, const Entity& monster) const {
  if (!agent.inventory) return false;
  const Entity& item = entity(*agent.inventory);
  return assignment.beats(item.rtfm().modifier, monster.rtfm().element);
}

double State::episode_return(int agent) const {
  return ledgers.at(static_cast<std::size_t>(agent)).total(config.step_penalty);
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  if (items.empty()) throw GenerationError("rtfm: split vocabulary exhausted");
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::vector<std::string> without(std::vector<std::string> items,
                                 const std::vector<std::string>& used) {
  std::erase_if(items, [&](const std::string& s) {
    return std::find(used.begin(), used.end(), s) != used.end();
  });
  return items;
}

Entity make_monster(int uid, const std::string& word, const std::string& element) {
  return Entity{uid,  text::kFirstEntitySymbol + uid,
                element + " " + word, RtfmTags{RtfmKind::monster, word, element, {}},
                {},   true};
}

Entity make_item(int uid, const std::string& weapon, const std::string& modifier) {
  return Entity{uid,  text::kFirstEntitySymbol + uid,
                modifier + " " + weapon, RtfmTags{RtfmKind::item, weapon, {}, modifier},
                {},   true};
}

}  // namespace

std::pair<State, Assignment> generate(const Config& config, const text::Resources& resources,
                                      Rng& rng) {
  config.validate();
  const text::RtfmSplitSets& sets = resources.splits.rtfm(config.split);
  const int n = config.n_agents;
  const bool distractors = config.has_distractors();

  const std::size_t elements_needed = static_cast<std::size_t>(n) + (distractors ? 1 : 0);
  if (elements_needed > sets.elements.size()) {
    throw GenerationError("rtfm: " + std::to_string(n) + " agents need " +
                          std::to_string(elements_needed) + " distinct elements, vocabulary has " +
                          std::to_string(sets.elements.size()));
  }

  Assignment a;
  a.one_to_one = config.one_to_one();

  std::vector<std::string> target_teams;
  for (const auto& t : sets.teams) {
    if (sets.monsters_of(t).size() >= static_cast<std::size_t>(n)) target_teams.push_back(t);
  }
  a.target_team = pick(target_teams, rng);

  std::vector<std::string> used_monsters;
  std::vector<std::string> used_modifiers;

  std::vector<std::string> elements = sets.elements;
  rng.shuffle(std::span(elements));

  std::vector<Entity> monsters;
  std::vector<Entity> items;

  std::vector<std::string> team_pool = sets.monsters_of(a.target_team);
  rng.shuffle(std::span(team_pool));
  for (int k = 0; k < n; ++k) {
    const std::string& word = team_pool[static_cast<std::size_t>(k)];
    const std::string& element = elements[static_cast<std::size_t>(k)];
    used_monsters.push_back(word);
    a.monster_team.push_back({word, a.target_team});
    monsters.push_back(make_monster(0, word, element));

    const std::string modifier =
        pick(without(sets.modifiers_beating(element), used_modifiers), rng);
    used_modifiers.push_back(modifier);
    a.modifier_element.push_back({modifier, element});
    items.push_back(make_item(0, pick(sets.weapons, rng), modifier));
  }

  if (distractors) {
    std::vector<std::string> other_teams;
    for (const auto& t : sets.teams) {
      if (t != a.target_team && !without(sets.monsters_of(t), used_monsters).empty()) {
        other_teams.push_back(t);
      }
    }
    const std::string team = pick(other_teams, rng);
    const std::string word = pick(without(sets.monsters_of(team), used_monsters), rng);
    const std::string& element = elements[static_cast<std::size_t>(n)];
    used_monsters.push_back(word);
    a.monster_team.push_back({word, team});
    monsters.push_back(make_monster(0, word, element));

    const std::string modifier =
        pick(without(sets.modifiers_beating(element), used_modifiers), rng);
    used_modifiers.push_back(modifier);
    a.modifier_element.push_back({modifier, element});
    items.push_back(make_item(0, pick(sets.weapons, rng), modifier));
  }

  if (!a.one_to_one) {
    // Many-to-one: the manual also describes monsters and modifiers absent from the grid.
    constexpr int kExtraMonsters = 2;
    constexpr int kExtraModifiers = 2;
    for (int i = 0; i < kExtraMonsters; ++i) {
      auto pool = without(sets.monsters, used_monsters);
      std::erase_if(pool, [&](const std::string& m) { return sets.teams_of(m).empty(); });
      if (pool.empty()) break;
      const std::string word = pick(pool, rng);
      used_monsters.push_back(word);
      a.monster_team.push_back({word, pick(sets.teams_of(word), rng)});
    }
    for (int i = 0; i < kExtraModifiers; ++i) {
      auto pool = without(sets.modifiers, used_modifiers);
      std::vector<std::string> usable;
      for (const auto& m : pool) {
        for (const auto& e : sets.elements) {
          if (sets.modifier_element.count({m, e})) {
            usable.push_back(m);
            break;
          }
        }
      }
      if (usable.empty()) break;
      const std::string modifier = pick(usable, rng);
      std::vector<std::string> beaten;
      for (const auto& e : sets.elements) {
        if (sets.modifier_element.count({modifier, e})) beaten.push_back(e);
      }
      used_modifiers.push_back(modifier);
      a.modifier_element.push_back({modifier, pick(beaten, rng)});
    }
    if (a.monster_team.size() <= static_cast<std::size_t>(n + (distractors ? 1 : 0))) {
      throw GenerationError("rtfm: no unused monster left for a many-to-one manual");
    }
  }

  // uid order: targets, correct items, distractor monster, distractor item.
  State s;
  s.config = config;
  auto add = [&](Entity e) {
    e.uid = static_cast<int>(s.entities.size());
    e.symbol = text::kFirstEntitySymbol + e.uid;
    s.entities.push_back(std::move(e));
    return s.entities.back().uid;
  };
  for (int k = 0; k < n; ++k) a.target_monsters.push_back(add(monsters[static_cast<std::size_t>(k)]));
  for (int k = 0; k < n; ++k) a.correct_items.push_back(add(items[static_cast<std::size_t>(k)]));
  if (distractors) {
    a.distractor_monster = add(monsters.back());
    a.distractor_item = add(items.back());
  }

  const GridSize gs = s.grid_size();
  const std::size_t needed = s.entities.size() + static_cast<std::size_t>(n);
  if (needed > static_cast<std::size_t>(gs.cells())) throw GenerationError("rtfm: grid too small");
  std::vector<int> cells(static_cast<std::size_t>(gs.cells()));
  for (int i = 0; i < gs.cells(); ++i) cells[static_cast<std::size_t>(i)] = i;
  rng.shuffle(std::span(cells));
  std::size_t next = 0;
  for (Entity& e : s.entities) e.pos = gs.pos(cells[next++]);
  for (int i = 0; i < n; ++i) {
    s.agents.push_back(AgentState{i, gs.pos(cells[next++]), std::nullopt, false, true});
  }
  s.ledgers.assign(static_cast<std::size_t>(n), RewardLedger{});
  s.assignment = a;
  return {std::move(s), std::move(a)};
}

Action monster_direction(GridPos monster, std::span<const GridPos> agents, double chase_prob,
                         Rng& rng) {
  if (agents.empty()) throw PreconditionError("monster_direction: no alive agent");
  if (rng.uniform() < chase_prob) {
    const auto nearest = nearest_index(monster, agents);
    return greedy_step_toward(monster, agents[*nearest]);
  }
  return kMoveActions[static_cast<std::size_t>(rng.below(kMoveActions.size()))];
}

StepResult step(State& s, std::span<const Action> joint_action, Rng& rng) {
  if (s.done) throw EpisodeError("rtfm: episode already finished");
  if (joint_action.size() != s.agents.size()) {
    throw EpisodeError("rtfm: expected " + std::to_string(s.agents.size()) + " actions, got " +
                       std::to_string(joint_action.size()));
  }
  const GridSize gs = s.grid_size();
  const std::size_t n = s.agents.size();
  std::vector<RewardLedger> before = s.ledgers;
  StepResult result;
  ++s.step;

  for (std::size_t i = 0; i < n; ++i) {
    s.agents[i].pos = apply_move(s.agents[i].pos, joint_action[i], gs);
  }

  for (AgentState& agent : s.agents) {
    for (Entity& e : s.entities) {
      if (!e.alive || e.rtfm().kind != RtfmKind::item || e.pos != agent.pos) continue;
      if (agent.inventory) {
        // The previous weapon leaves play.
        result.events.push_back({"drop", agent.id, *agent.inventory});
      }
      agent.inventory = e.uid;
      e.alive = false;
      result.events.push_back({"pickup", agent.id, e.uid});
      break;
    }
  }

  bool lost = false;
  for (AgentState& agent : s.agents) {
    if (s.done) break;
    for (Entity& e : s.entities) {
      if (s.done) break;
      if (!e.alive || e.rtfm().kind != RtfmKind::monster || e.pos != agent.pos) continue;
      RewardLedger& ledger = s.ledgers[static_cast<std::size_t>(agent.id)];
      if (s.assignment.distractor_monster == e.uid) {
        if (s.effective(agent, e)) {
          e.alive = false;
          result.events.push_back({"kill_distractor", agent.id, e.uid});
        } else {
          result.events.push_back({"distractor", agent.id, e.uid});
        }
        ++ledger.losses;
        s.done = true;
        lost = true;
      } else if (s.effective(agent, e)) {
        e.alive = false;
        ++ledger.kills;
        result.events.push_back({"kill", agent.id, e.uid});
        if (s.alive_targets().empty()) {
          s.done = true;
          s.win = true;
        }
      } else {
        result.events.push_back({"unarmed", agent.id, e.uid});
        ++ledger.losses;
        s.done = true;
        lost = true;
      }
    }
  }

  if (!s.done && s.config.monsters_move()) {
    std::vector<GridPos> agent_pos;
    for (const AgentState& a : s.agents) {
      if (a.alive) agent_pos.push_back(a.pos);
    }
    for (Entity& e : s.entities) {
      if (!e.alive || e.rtfm().kind != RtfmKind::monster) continue;
      e.pos = apply_move(e.pos, monster_direction(e.pos, agent_pos, s.config.chase_prob, rng), gs);
    }
  }

  for (RewardLedger& l : s.ledgers) ++l.steps;

  if (!s.done && s.step >= s.config.max_steps) {
    s.done = true;
    result.events.push_back({"timeout", -1, -1});
    lost = true;
  }
  if (s.win) result.events.push_back({"win", -1, -1});
  if (lost) result.events.push_back({"lose", -1, -1});

  result.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RewardLedger& now = s.ledgers[i];
    const RewardLedger& was = before[i];
    result.rewards[i] = static_cast<double>(now.kills - was.kills) -
                        static_cast<double>(now.losses - was.losses) + s.config.step_penalty;
  }
  result.done = s.done;
  result.win = s.win;
  return result;
}

TextGrid render_grid(const State& s, int viewer) {
  const int g = s.config.grid;
  TextGrid grid(static_cast<std::size_t>(g),
                std::vector<std::vector<std::string>>(static_cast<std::size_t>(g)));
  for (const Entity& e : s.entities) {
    if (!e.alive) continue;
    grid[static_cast<std::size_t>(e.pos.row)][static_cast<std::size_t>(e.pos.col)].push_back(e.name);
  }
  for (const AgentState& a : s.agents) {
    grid[static_cast<std::size_t>(a.pos.row)][static_cast<std::size_t>(a.pos.col)].push_back(
        a.id == viewer ? "you" : "ally");
  }
  return grid;
}

std::string inventory_text(const State& s, int agent) {
  const AgentState& a = s.agents.at(static_cast<std::size_t>(agent));
  return a.inventory ? s.entity(*a.inventory).name : std::string();
}

}  // namespace langgrid::rtfm
