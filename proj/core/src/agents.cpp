#include "langgrid/agents.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include "langgrid/error.hpp"
#include "langgrid/transcript.hpp"

namespace langgrid::agents {

// ---- shortest paths ----

CostMap::CostMap(GridSize g)
    : grid(g),
      blocked(static_cast<std::size_t>(g.height * g.width), false),
      soft(static_cast<std::size_t>(g.height * g.width), false) {}

namespace {

std::size_t index_of(GridSize g, GridPos p) { return static_cast<std::size_t>(p.row * g.width + p.col); }

}  // namespace

void CostMap::block(GridPos p) {
  if (grid.contains(p)) blocked[index_of(grid, p)] = true;
}

void CostMap::soften_around(GridPos p) {
  for (Action a : kAllActions) {
    const GridPos q = apply_move(p, a, grid);
    soft[index_of(grid, q)] = true;
  }
}

bool CostMap::is_blocked(GridPos p) const { return blocked[index_of(grid, p)]; }

CostMap lexicographic(GridSize g) {
  CostMap c(g);
  c.step_cost = 1000;
  c.soft_penalty = 1;
  return c;
}

CostMap detouring(GridSize g, int detour) {
  CostMap c(g);
  c.step_cost = 1;
  c.soft_penalty = detour;
  return c;
}

PathStep first_step(const CostMap& costs, GridPos from, GridPos to) {
  const GridSize g = costs.grid;
  if (!g.contains(from) || !g.contains(to)) throw PreconditionError("first_step: off-grid");
  if (costs.is_blocked(to)) return {};
  if (from == to) return {Action::stay, 0, 0};

  // Dijkstra from the goal; dist[v] = cheapest cost of reaching `to` from v,
  // counting every cell entered after v.
  const std::size_t cells = static_cast<std::size_t>(g.height * g.width);
  auto enter = [&](GridPos p) {
    return costs.step_cost + (p != to && costs.soft[index_of(g, p)] ? costs.soft_penalty : 0);
  };
  std::vector<int> dist(cells, kUnreachable), len(cells, kUnreachable);
  using Item = std::pair<int, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[index_of(g, to)] = 0;
  len[index_of(g, to)] = 0;
  queue.emplace(0, index_of(g, to));
  while (!queue.empty()) {
    const auto [d, vi] = queue.top();
    queue.pop();
    if (d != dist[vi]) continue;
    const GridPos v{static_cast<int>(vi) / g.width, static_cast<int>(vi) % g.width};
    const int through = d + enter(v);
    for (Action a : kMoveActions) {
      const GridPos u = apply_move(v, a, g);
      if (u == v) continue;
      const std::size_t ui = index_of(g, u);
      // The start may be blocked (e.g. a monster moved onto the agent); it is left, never entered.
      if (costs.blocked[ui] && u != from) continue;
      if (through < dist[ui] || (through == dist[ui] && len[vi] + 1 < len[ui])) {
        dist[ui] = through;
        len[ui] = len[vi] + 1;
        if (u != from) queue.emplace(through, ui);
      }
    }
  }
  PathStep best;
  int best_cheb = kUnreachable;
  for (Action a : kMoveActions) {
    const GridPos n = apply_move(from, a, g);
    if (n == from || costs.is_blocked(n)) continue;
    const std::size_t ni = index_of(g, n);
    if (dist[ni] >= kUnreachable) continue;
    const int c = enter(n) + dist[ni];
    // Among equally cheap moves, close the larger axis gap first: diagonal
    // approach corners a fleeing target instead of mirroring it.
    const int cheb = std::max(std::abs(n.row - to.row), std::abs(n.col - to.col));
    if (c < best.cost || (c == best.cost && cheb < best_cheb)) {
      best = {a, c, len[ni] + 1};
      best_cheb = cheb;
    }
  }
  return best;
}

// ---- matching ----

std::vector<int> match(const std::vector<std::vector<int>>& cost) {
  const std::size_t n = cost.size();
  std::vector<int> out(n, -1);
  if (n == 0) return out;
  const std::size_t tasks = cost.front().size();
  for (const auto& row : cost) {
    if (row.size() != tasks) throw PreconditionError("match: ragged cost matrix");
  }
  auto ok = [&](std::size_t a, int t) { return cost[a][static_cast<std::size_t>(t)] < kUnreachable; };

  if (n <= 3) {
    // Enumerate every partial injection agent -> task (or none).
    std::vector<int> cur(n, -1), best;
    int best_covered = -1;
    long best_cost = 0;
    std::vector<bool> used(tasks, false);
    std::function<void(std::size_t, int, long)> rec = [&](std::size_t a, int covered, long total) {
      if (a == n) {
        if (covered > best_covered || (covered == best_covered && total < best_cost)) {
          best = cur;
          best_covered = covered;
          best_cost = total;
        }
        return;
      }
      for (std::size_t t = 0; t < tasks; ++t) {
        if (used[t] || !ok(a, static_cast<int>(t))) continue;
        used[t] = true;
        cur[a] = static_cast<int>(t);
        rec(a + 1, covered + 1, total + cost[a][t]);
        used[t] = false;
      }
      cur[a] = -1;
      rec(a + 1, covered, total);
    };
    rec(0, 0, 0);
    return best;
  }

  std::vector<bool> agent_done(n, false), task_done(tasks, false);
  while (true) {
    int best_cost = kUnreachable;
    std::size_t ba = 0, bt = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (agent_done[a]) continue;
      for (std::size_t t = 0; t < tasks; ++t) {
        if (!task_done[t] && cost[a][t] < best_cost) {
          best_cost = cost[a][t];
          ba = a;
          bt = t;
        }
      }
    }
    if (best_cost >= kUnreachable) break;
    out[ba] = static_cast<int>(bt);
    agent_done[ba] = true;
    task_done[bt] = true;
  }
  return out;
}

std::vector<Action> Plan::joint() const {
  std::vector<Action> out;
  for (const AgentPlan& a : agents) out.push_back(a.action);
  return out;
}

namespace {

/// Move for an agent with nothing to do: stay unless the cell is dangerous,
/// otherwise the safe neighbour farthest from the nearest danger.
Action idle_move(GridPos at, GridSize g, const std::vector<GridPos>& danger,
                 const CostMap& forbidden) {
  const bool unsafe = std::find(danger.begin(), danger.end(), at) != danger.end();
  if (!unsafe) return Action::stay;
  // Farthest from danger first, then the most open cell (corners trap).
  Action best = Action::stay;
  std::pair<int, int> best_score{-1, -1};
  for (Action a : kMoveActions) {
    const GridPos n = apply_move(at, a, g);
    if (n == at || forbidden.is_blocked(n)) continue;
    int d = kUnreachable;
    for (const GridPos& p : danger) d = std::min(d, manhattan(n, p));
    int exits = 0;
    for (Action b : kMoveActions) {
      const GridPos m = apply_move(n, b, g);
      exits += m != n && !forbidden.is_blocked(m);
    }
    const std::pair<int, int> score{d, exits};
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

/// Move toward `to`; when no path exists, wait if safe or step aside.
Action move_toward(const CostMap& costs, GridPos from, GridPos to, const std::vector<GridPos>& danger) {
  const PathStep s = first_step(costs, from, to);
  if (s.cost < kUnreachable) return s.action;
  return idle_move(from, costs.grid, danger, costs);
}

/// Weighted cost, the same quantity the move choice minimises. Matching on it keeps
/// the assignment stable from step to step.
int path_cost(const CostMap& costs, GridPos from, GridPos to) { return first_step(costs, from, to).cost; }

}  // namespace

// ---- RTFM ----

namespace {

struct RtfmTask {
  int monster = -1;
};

/// Obstacles for an agent: every live monster except `monster_ok`, every live
/// item except `item_ok`. Hazardous monsters soften their neighbourhood.
CostMap rtfm_costs(const rtfm::State& s, int monster_ok, int item_ok) {
  CostMap c = detouring(s.grid_size(), 4);
  for (const Entity& e : s.entities) {
    if (!e.alive) continue;
    if (e.rtfm().kind == RtfmKind::monster) {
      if (e.uid == monster_ok) continue;
      c.block(e.pos);
      c.soften_around(e.pos);
    } else if (e.uid != item_ok) {
      c.block(e.pos);
    }
  }
  return c;
}

std::vector<int> effective_items(const rtfm::State& s, const Entity& monster) {
  std::vector<int> out;
  for (const Entity& e : s.entities) {
    if (e.alive && e.rtfm().kind == RtfmKind::item &&
        s.assignment.beats(e.rtfm().modifier, monster.rtfm().element)) {
      out.push_back(e.uid);
    }
  }
  return out;
}

struct RtfmOption {
  int cost = kUnreachable;
  int item = -1;  // -1: already armed
};

RtfmOption rtfm_option(const rtfm::State& s, const AgentState& a, const Entity& monster) {
  if (s.effective(a, monster)) {
    return {path_cost(rtfm_costs(s, monster.uid, -1), a.pos, monster.pos), -1};
  }
  // A held weapon that still matters is never swapped: dropping it could leave
  // its monster unkillable.
  for (int uid : s.alive_targets()) {
    if (s.effective(a, s.entity(uid))) return {};
  }
  RtfmOption best;
  for (int item : effective_items(s, monster)) {
    const GridPos ip = s.entity(item).pos;
    const int first = path_cost(rtfm_costs(s, -1, item), a.pos, ip);
    const int second = path_cost(rtfm_costs(s, monster.uid, -1), ip, monster.pos);
    if (first >= kUnreachable || second >= kUnreachable) continue;
    if (first + second < best.cost) best = {first + second, item};
  }
  return best;
}

}  // namespace

Plan plan_rtfm(const rtfm::State& s) {
  Plan plan;
  plan.agents.resize(s.agents.size());
  if (s.done) return plan;
  const std::vector<int> targets = s.alive_targets();

  std::vector<std::vector<int>> cost(s.agents.size(), std::vector<int>(targets.size(), kUnreachable));
  std::vector<std::vector<RtfmOption>> options(s.agents.size(), std::vector<RtfmOption>(targets.size()));
  for (std::size_t a = 0; a < s.agents.size(); ++a) {
    if (!s.agents[a].alive) continue;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      options[a][t] = rtfm_option(s, s.agents[a], s.entity(targets[t]));
      cost[a][t] = options[a][t].cost;
    }
  }
  // Two agents must not head for the same item: a second pass drops clashes.
  std::vector<int> assigned = match(cost);
  for (std::size_t a = 0; a < assigned.size(); ++a) {
    for (std::size_t b = a + 1; b < assigned.size(); ++b) {
      if (assigned[a] < 0 || assigned[b] < 0) continue;
      const auto& oa = options[a][static_cast<std::size_t>(assigned[a])];
      const auto& ob = options[b][static_cast<std::size_t>(assigned[b])];
      if (oa.item >= 0 && oa.item == ob.item) assigned[b] = -1;
    }
  }

  for (std::size_t a = 0; a < s.agents.size(); ++a) {
    const AgentState& agent = s.agents[a];
    AgentPlan& p = plan.agents[a];
    if (!agent.alive) continue;
    if (assigned[a] < 0) {
      std::vector<GridPos> danger;
      for (const Entity& e : s.entities) {
        if (e.alive && e.rtfm().kind == RtfmKind::monster) danger.push_back(e.pos);
      }
      p.action = idle_move(agent.pos, s.grid_size(), danger, rtfm_costs(s, -1, -1));
      continue;
    }
    const Entity& monster = s.entity(targets[static_cast<std::size_t>(assigned[a])]);
    const RtfmOption& opt = options[a][static_cast<std::size_t>(assigned[a])];
    if (opt.item >= 0) {
      p.waypoints.push_back(s.entity(opt.item).pos);
      p.targets.push_back(opt.item);
    }
    p.waypoints.push_back(monster.pos);
    p.targets.push_back(monster.uid);

    const CostMap costs = opt.item >= 0 ? rtfm_costs(s, -1, opt.item) : rtfm_costs(s, monster.uid, -1);
    std::vector<GridPos> danger;
    for (const Entity& e : s.entities) {
      if (e.alive && e.rtfm().kind == RtfmKind::monster && (opt.item >= 0 || e.uid != monster.uid)) {
        danger.push_back(e.pos);
      }
    }
    p.action = move_toward(costs, agent.pos, p.waypoints.front(), danger);
  }
  return plan;
}

std::vector<Action> oracle_rtfm(const rtfm::State& s) { return plan_rtfm(s).joint(); }

// ---- MESSENGER ----

namespace {

bool is_role(const Entity& e, Role r) { return e.alive && e.messenger().role == r; }

/// Hard obstacles: the enemy always; goals while the agent holds no message.
/// `avoid` adds further cells (other agents' targets).
CostMap messenger_costs(const messenger::State& s, const AgentState& a, const std::vector<GridPos>& avoid) {
  CostMap c = s.config.stage.value == 1 ? lexicographic(s.grid_size()) : detouring(s.grid_size(), 2);
  for (const Entity& e : s.entities) {
    if (is_role(e, Role::enemy)) {
      c.block(e.pos);
      c.soften_around(e.pos);
    } else if (is_role(e, Role::goal) && !a.has_message) {
      c.block(e.pos);
    }
  }
  for (const GridPos& p : avoid) c.block(p);
  return c;
}

}  // namespace

Plan plan_messenger(const messenger::State& s) {
  Plan plan;
  plan.agents.resize(s.agents.size());
  if (s.done) return plan;
  const bool s3 = s.config.stage.value >= 3;

  std::vector<GridPos> enemy;
  for (const Entity& e : s.entities) {
    if (is_role(e, Role::enemy)) enemy.push_back(e.pos);
  }

  // Tasks: live messages and goals.
  std::vector<int> tasks;
  for (const Entity& e : s.entities) {
    if (is_role(e, Role::message) || is_role(e, Role::goal)) tasks.push_back(e.uid);
  }
  auto wants = [&](std::size_t a, const Entity& e) {
    const AgentState& agent = s.agents[a];
    if (s.finished[a]) return false;
    if (e.messenger().role == Role::message) return !agent.has_message;
    if (!agent.has_message) return false;
    if (s3) return true;
    for (std::size_t b = 0; b < s.agents.size(); ++b) {
      if (b != a && s.credited[b] == e.uid) return false;
    }
    return true;
  };

  std::vector<std::vector<int>> cost(s.agents.size(), std::vector<int>(tasks.size(), kUnreachable));
  for (std::size_t a = 0; a < s.agents.size(); ++a) {
    const CostMap costs = messenger_costs(s, s.agents[a], {});
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const Entity& e = s.entity(tasks[t]);
      if (wants(a, e)) cost[a][t] = path_cost(costs, s.agents[a].pos, e.pos);
    }
  }
  std::vector<int> assigned(s.agents.size(), -1);
  if (s3) {
    // Goals need not be distinct; messages must be.
    std::vector<std::vector<int>> message_cost = cost;
    for (std::size_t a = 0; a < s.agents.size(); ++a) {
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (s.entity(tasks[t]).messenger().role != Role::message) message_cost[a][t] = kUnreachable;
      }
    }
    assigned = match(message_cost);
    for (std::size_t a = 0; a < s.agents.size(); ++a) {
      if (!s.agents[a].has_message) continue;
      const auto it = std::min_element(cost[a].begin(), cost[a].end());
      if (it != cost[a].end() && *it < kUnreachable) assigned[a] = static_cast<int>(it - cost[a].begin());
    }
  } else {
    assigned = match(cost);
  }

  for (std::size_t a = 0; a < s.agents.size(); ++a) {
    const AgentState& agent = s.agents[a];
    AgentPlan& p = plan.agents[a];
    // Cells the agent must not end a move on.
    std::vector<GridPos> danger = enemy;
    if (!s.finished[a] && !agent.has_message) {
      for (const Entity& e : s.entities) {
        if (is_role(e, Role::goal)) danger.push_back(e.pos);
      }
    }
    if (assigned[a] < 0) {
      // A finished agent ignores everything but the enemy, so it can herd a
      // teammate's fleeing target; one pursuer alone never corners a fleer.
      const Entity* herd = nullptr;
      if (s.finished[a]) {
        for (std::size_t b = 0; b < s.agents.size() && !herd; ++b) {
          if (b == a || assigned[b] < 0) continue;
          const Entity& t = s.entity(tasks[static_cast<std::size_t>(assigned[b])]);
          if (t.messenger().movement == Movement::fleeing) herd = &t;
        }
      }
      p.action = herd ? move_toward(messenger_costs(s, agent, {}), agent.pos, herd->pos, danger)
                      : idle_move(agent.pos, s.grid_size(), danger, messenger_costs(s, agent, {}));
      continue;
    }
    const Entity& target = s.entity(tasks[static_cast<std::size_t>(assigned[a])]);
    p.waypoints.push_back(target.pos);
    p.targets.push_back(target.uid);
    if (s3 && target.messenger().role == Role::message) {
      // Delivery follows: the nearest goal from the message cell.
      int best = kUnreachable;
      const Entity* goal = nullptr;
      for (const Entity& e : s.entities) {
        if (!is_role(e, Role::goal)) continue;
        const int d = manhattan(target.pos, e.pos);
        if (d < best) {
          best = d;
          goal = &e;
        }
      }
      if (goal) {
        p.waypoints.push_back(goal->pos);
        p.targets.push_back(goal->uid);
      }
    }
    // Prefer paths that leave everyone else's targets alone.
    std::vector<GridPos> avoid;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const Entity& e = s.entity(tasks[t]);
      if (e.uid == target.uid) continue;
      const bool consumable = e.messenger().role == Role::message && !agent.has_message;
      // Delivering to a goal a teammate already used wastes the message at S1/S2.
      const bool wrong_goal = !s3 && e.messenger().role == Role::goal && agent.has_message;
      if (consumable || wrong_goal) avoid.push_back(e.pos);
    }
    const PathStep careful = first_step(messenger_costs(s, agent, avoid), agent.pos, target.pos);
    p.action = careful.cost < kUnreachable
                   ? careful.action
                   : move_toward(messenger_costs(s, agent, {}), agent.pos, target.pos, danger);
  }
  return plan;
}

std::vector<Action> oracle_messenger(const messenger::State& s) { return plan_messenger(s).joint(); }

// ---- policies ----

std::vector<Action> oracle(const Episode& episode, Rng&) {
  return episode.is_rtfm() ? oracle_rtfm(episode.rtfm_state())
                           : oracle_messenger(episode.messenger_state());
}

std::vector<Action> random_actions(const Episode& episode, Rng& rng) {
  std::vector<Action> out;
  for (int i = 0; i < episode.n_agents(); ++i) out.push_back(kAllActions[rng.below(kAllActions.size())]);
  return out;
}

std::vector<Action> stay_actions(const Episode& episode, Rng&) {
  return std::vector<Action>(static_cast<std::size_t>(episode.n_agents()), Action::stay);
}

Policy policy_by_name(std::string_view name) {
  if (name == "oracle") return oracle;
  if (name == "random") return random_actions;
  if (name == "stay") return stay_actions;
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected oracle, random or stay)");
}

Episode run_episode(const Policy& policy, const EpisodeSpec& spec, Rng& policy_rng) {
  Episode ep(spec);
  while (!ep.done()) {
    const std::vector<Action> actions = policy(ep, policy_rng);
    ep.step(actions);
  }
  return ep;
}

EvalReport evaluate(const Policy& policy, const EpisodeSpec& base, int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw ConfigError("evaluate: episodes must be positive");
  EvalReport r;
  r.episodes = episodes;
  double returns = 0.0;
  long steps = 0;
  std::map<std::string, int> losses;
  const Rng root(seed);
  for (int i = 0; i < episodes; ++i) {
    EpisodeSpec spec = base;
    spec.seed = derive_seed(seed, "episode", static_cast<std::uint64_t>(i));
    Rng policy_rng = root.child("policy", static_cast<std::uint64_t>(i));
    const Episode ep = run_episode(policy, spec, policy_rng);
    if (ep.win()) {
      ++r.wins;
    } else {
      for (const StepRecord& rec : ep.transcript().steps) {
        for (const std::string& token : rec.events) {
          const std::string kind = token.substr(0, token.find(':'));
          if (kind != "lose") ++losses[kind];
        }
      }
    }
    double total = 0.0;
    for (int a = 0; a < ep.n_agents(); ++a) total += ep.episode_return(a);
    returns += total / ep.n_agents();
    steps += ep.step_count();
  }
  r.win_rate = static_cast<double>(r.wins) / episodes;
  r.mean_return = returns / episodes;
  r.mean_length = static_cast<double>(steps) / episodes;
  for (const auto& [name, count] : losses) r.loss_events.push_back(name + "=" + std::to_string(count));
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "episodes=" << episodes << '\n'
     << "wins=" << wins << '\n'
     << "win_rate=" << format_double(win_rate) << '\n'
     << "mean_return=" << format_double(mean_return) << '\n'
     << "mean_length=" << format_double(mean_length) << '\n';
  for (const std::string& e : loss_events) os << "loss_event." << e << '\n';
  return os.str();
}

}  // namespace langgrid::agents
