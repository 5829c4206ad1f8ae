#include "langgrid/types.hpp"

#include <algorithm>
#include <cstdlib>

#include "langgrid/error.hpp"

namespace langgrid {

std::vector<std::vector<int>> IntMap::rows() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) {
    out[static_cast<std::size_t>(r)].assign(values.begin() + r * width,
                                            values.begin() + (r + 1) * width);
  }
  return out;
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
    case Action::stay: return "stay";
  }
  return "stay";
}

std::optional<Action> parse_action(std::string_view s) {
  for (Action a : kAllActions) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

GridPos apply_move(GridPos p, Action a, GridSize grid) {
  GridPos next = p;
  switch (a) {
    case Action::up: --next.row; break;
    case Action::down: ++next.row; break;
    case Action::left: --next.col; break;
    case Action::right: ++next.col; break;
    case Action::stay: break;
  }
  return grid.contains(next) ? next : p;
}

int manhattan(GridPos a, GridPos b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

IntMap positional_feature(GridPos pos, int height, int width) {
  if (height <= 0 || width <= 0) throw PreconditionError("positional_feature: empty grid");
  if (!GridSize{height, width}.contains(pos)) {
    throw PreconditionError("positional_feature: position off-grid");
  }
  IntMap map{height, width, std::vector<int>(static_cast<std::size_t>(height * width))};
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) map.at(r, c) = manhattan(pos, {r, c});
  }
  return map;
}

IntMap joint_positional_feature(std::span<const GridPos> others, int height, int width) {
  if (others.empty()) throw PreconditionError("no other agents");
  IntMap joint = positional_feature(others.front(), height, width);
  for (const GridPos& p : others.subspan(1)) {
    const IntMap single = positional_feature(p, height, width);
    for (std::size_t i = 0; i < joint.values.size(); ++i) {
      joint.values[i] = std::min(joint.values[i], single.values[i]);
    }
  }
  return joint;
}

Action greedy_step_toward(GridPos from, GridPos to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  if (dr == 0 && dc == 0) return Action::stay;
  if (std::abs(dr) >= std::abs(dc)) return dr > 0 ? Action::down : Action::up;
  return dc > 0 ? Action::right : Action::left;
}

std::optional<std::size_t> nearest_index(GridPos from, std::span<const GridPos> targets) {
  std::optional<std::size_t> best;
  int best_d = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int d = manhattan(from, targets[i]);
    if (!best || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

std::string_view to_string(EnvKind e) { return e == EnvKind::rtfm ? "rtfm" : "messenger"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::eval: return "eval";
    case Split::eval_new: return "eval_new";
  }
  return "train";
}

std::optional<EnvKind> parse_env(std::string_view s) {
  if (s == "rtfm") return EnvKind::rtfm;
  if (s == "messenger") return EnvKind::messenger;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "eval") return Split::eval;
  if (s == "eval_new" || s == "eval-new") return Split::eval_new;
  return std::nullopt;
}

std::string to_string(Stage s) { return "S" + std::to_string(s.value); }

std::optional<Stage> parse_stage(std::string_view s) {
  if (s.size() == 2 && (s[0] == 'S' || s[0] == 's') && s[1] >= '1' && s[1] <= '9') {
    return Stage{s[1] - '0'};
  }
  if (s.size() == 1 && s[0] >= '1' && s[0] <= '9') return Stage{s[0] - '0'};
  return std::nullopt;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::enemy: return "enemy";
    case Role::message: return "message";
    case Role::goal: return "goal";
  }
  return "enemy";
}

std::string_view to_string(Movement m) {
  switch (m) {
    case Movement::stationary: return "stationary";
    case Movement::random: return "random";
    case Movement::chasing: return "chasing";
    case Movement::fleeing: return "fleeing";
  }
  return "stationary";
}

}  // namespace langgrid

namespace langgrid {

std::string Event::token() const {
  std::string out = kind;
  if (agent >= 0) out += ":a" + std::to_string(agent);
  if (uid >= 0) out += ":u" + std::to_string(uid);
  return out;
}

}  // namespace langgrid
