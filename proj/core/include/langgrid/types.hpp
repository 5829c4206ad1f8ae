#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace langgrid {

struct GridPos {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridPos&, const GridPos&) = default;
  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

struct GridSize {
  int height = 0;
  int width = 0;

  bool contains(GridPos p) const {
    return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
  }
  int cells() const { return height * width; }
  int index(GridPos p) const { return p.row * width + p.col; }
  GridPos pos(int index) const { return {index / width, index % width}; }

  friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// Dense h x w integer map, row-major.
struct IntMap {
  int height = 0;
  int width = 0;
  std::vector<int> values;

  int at(int row, int col) const { return values[static_cast<std::size_t>(row * width + col)]; }
  int& at(int row, int col) { return values[static_cast<std::size_t>(row * width + col)]; }
  std::vector<std::vector<int>> rows() const;

  friend bool operator==(const IntMap&, const IntMap&) = default;
};

enum class Action : std::uint8_t { up = 0, down = 1, left = 2, right = 3, stay = 4 };

inline constexpr std::array<Action, 5> kAllActions = {Action::up, Action::down, Action::left,
                                                      Action::right, Action::stay};
inline constexpr std::array<Action, 4> kMoveActions = {Action::up, Action::down, Action::left,
                                                       Action::right};
inline constexpr int kNumActions = 5;

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view s);

/// Position after applying `a`; moves that would leave the grid resolve to stay.
GridPos apply_move(GridPos p, Action a, GridSize grid);

int manhattan(GridPos a, GridPos b);

/// Cell (r, c) holds manhattan(pos, (r, c)). Throws PreconditionError if pos is off-grid.
IntMap positional_feature(GridPos pos, int height, int width);

/// Cellwise minimum of the positional features of `others`.
IntMap joint_positional_feature(std::span<const GridPos> others, int height, int width);

/// Greedy single step from `from` toward `to`: the axis with the larger remaining
/// distance moves first, rows win ties, co-located yields stay.
Action greedy_step_toward(GridPos from, GridPos to);

/// Index of the nearest position in `targets` (lowest index on ties). Empty -> nullopt.
std::optional<std::size_t> nearest_index(GridPos from, std::span<const GridPos> targets);

enum class EnvKind : std::uint8_t { rtfm, messenger };
enum class Split : std::uint8_t { train, eval, eval_new };

std::string_view to_string(EnvKind e);
std::string_view to_string(Split s);
std::optional<EnvKind> parse_env(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

/// Curriculum stage, 1-based ("S1" .. "S5").
struct Stage {
  int value = 1;
  friend bool operator==(const Stage&, const Stage&) = default;
  friend auto operator<=>(const Stage&, const Stage&) = default;
};
std::string to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

// ---- entities ----

enum class RtfmKind : std::uint8_t { monster, item };

struct RtfmTags {
  RtfmKind kind = RtfmKind::monster;
  std::string word;      // monster or weapon word, e.g. "goblin" / "sword"
  std::string element;   // monsters only
  std::string modifier;  // items only
};

enum class Role : std::uint8_t { enemy, message, goal };
enum class Movement : std::uint8_t { stationary, random, chasing, fleeing };

std::string_view to_string(Role r);
std::string_view to_string(Movement m);

struct MessengerTags {
  Role role = Role::enemy;
  Movement movement = Movement::stationary;
};

struct Entity {
  int uid = 0;
  int symbol = 0;
  std::string name;
  std::variant<RtfmTags, MessengerTags> tags;
  GridPos pos;
  bool alive = true;

  const RtfmTags& rtfm() const { return std::get<RtfmTags>(tags); }
  const MessengerTags& messenger() const { return std::get<MessengerTags>(tags); }
};

struct AgentState {
  int id = 0;
  GridPos pos;
  std::optional<int> inventory;  // uid of the held item (RTFM)
  bool has_message = false;      // MESSENGER
  bool alive = true;
};

}  // namespace langgrid

namespace langgrid {

/// Something that happened during a step, rendered in transcripts as
/// "<kind>[:a<agent>][:u<uid>]".
struct Event {
  std::string kind;
  int agent = -1;
  int uid = -1;

  std::string token() const;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Per-cell list of rendered words or phrases, indexed [row][col].
using TextGrid = std::vector<std::vector<std::vector<std::string>>>;

}  // namespace langgrid
