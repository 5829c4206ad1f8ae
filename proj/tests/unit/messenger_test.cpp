#include <gtest/gtest.h>

#include <array>
#include <map>

#include "langgrid/error.hpp"
#include "langgrid/manual.hpp"
#include "langgrid/messenger.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::messenger {
namespace {

const text::Resources& res() { return text::Resources::builtin(); }

Config config(int stage, int n = 2) {
  Config c;
  c.stage = Stage{stage};
  c.n_agents = n;
  return c;
}

RoleAssignment layout(Movement mv = Movement::stationary, bool with_messages = false) {
  RoleAssignment a;
  a.start_with_messages = with_messages;
  const char* names[] = {"dog", "mage", "fish", "queen", "robot"};
  const Role roles[] = {Role::enemy, Role::message, Role::message, Role::goal, Role::goal};
  const int symbols[] = {4, 3, 6, 12, 11};
  for (int i = 0; i < 5; ++i) a.entities.push_back({names[i], symbols[i], roles[i], mv});
  return a;
}

// enemy (0,0), messages (5,7) and (5,3), goals (3,5) and (7,5); agents start at (5,5).
const std::array<GridPos, 5> kCells{GridPos{0, 0}, GridPos{5, 7}, GridPos{5, 3}, GridPos{3, 5},
                                    GridPos{7, 5}};

std::vector<Action> acts(std::initializer_list<Action> a) { return a; }

TEST(Candidates, DistinctAndReachable) {
  const GridSize g{10, 10};
  const auto cells = candidate_locations(g);
  std::set<GridPos> uniq(cells.begin(), cells.end());
  EXPECT_EQ(uniq.size(), 5u);
  for (GridPos p : cells) {
    EXPECT_TRUE(g.contains(p));
    EXPECT_LE(manhattan(center(g), p), 4);
    EXPECT_NE(p, center(g));
  }
  // No candidate lies inside another's bounding box with the centre.
  for (GridPos p : cells) {
    for (GridPos q : cells) {
      if (p == q) continue;
      const GridPos c = center(g);
      const bool inside = q.row >= std::min(c.row, p.row) && q.row <= std::max(c.row, p.row) &&
                          q.col >= std::min(c.col, p.col) && q.col <= std::max(c.col, p.col);
      EXPECT_FALSE(inside);
    }
  }
}

TEST(Generate, RolesAndPlacement) {
  for (int stage = 1; stage <= 3; ++stage) {
    for (Split split : {Split::train, Split::eval}) {
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Config c = config(stage);
        c.split = split;
        Rng rng(seed);
        auto [s, a] = generate(c, res(), rng);
        ASSERT_EQ(s.entities.size(), 5u);
        std::map<Role, int> count;
        std::set<GridPos> cells;
        std::set<std::string> names;
        const auto cand = candidate_locations(s.grid_size());
        for (const Entity& e : s.entities) {
          ++count[e.messenger().role];
          cells.insert(e.pos);
          names.insert(e.name);
          EXPECT_NE(std::find(cand.begin(), cand.end(), e.pos), cand.end());
          EXPECT_TRUE(res().splits.messenger(split).entity_role.count({e.name, e.messenger().role}));
          if (stage == 1) EXPECT_EQ(e.messenger().movement, Movement::stationary);
          if (stage == 2) EXPECT_EQ(e.messenger().movement, Movement::random);
          if (stage == 3) EXPECT_NE(e.messenger().movement, Movement::random);
        }
        EXPECT_EQ(count[Role::enemy], 1);
        EXPECT_EQ(count[Role::message], 2);
        EXPECT_EQ(count[Role::goal], 2);
        EXPECT_EQ(cells.size(), 5u);
        EXPECT_EQ(names.size(), 5u);
        for (const AgentState& ag : s.agents) {
          EXPECT_EQ(ag.pos, (GridPos{5, 5}));
          EXPECT_EQ(ag.has_message, a.start_with_messages);
          if (stage == 3) EXPECT_FALSE(ag.has_message);
        }
      }
    }
  }
}

TEST(Generate, StartWithoutMessageProbability) {
  int without = 0;
  constexpr int kN = 10000;
  for (int seed = 0; seed < kN; ++seed) {
    Rng rng = Rng::split(static_cast<std::uint64_t>(seed), "spawn");
    auto [s, a] = generate(config(1), res(), rng);
    without += !a.start_with_messages;
  }
  EXPECT_NEAR(static_cast<double>(without) / kN, 0.8, 0.01);
}

TEST(Generate, Deterministic) {
  Rng a(3), b(3);
  EXPECT_EQ(generate(config(3), res(), a).second.canonical(),
            generate(config(3), res(), b).second.canonical());
}

TEST(Config, Validation) {
  EXPECT_THROW(config(4).validate(), ConfigError);
  EXPECT_THROW(config(1, 3).validate(), ConfigError);
  Config c = config(1);
  c.split = Split::eval_new;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(config(1).step_limit(), 4);
  EXPECT_EQ(config(2).step_limit(), 32);
  EXPECT_EQ(config(3).step_limit(), 64);
}

TEST(Step, S1DistinctMessagesWin) {
  State s = make_state(config(1), layout(), kCells);
  Rng rng(1);
  step(s, acts({Action::right, Action::left}), rng);
  const StepResult r = step(s, acts({Action::right, Action::left}), rng);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.win);
  EXPECT_EQ(r.rewards, (std::vector<double>{1.0, 1.0}));
}

TEST(Step, S1SameGoalIsNotAWin) {
  // Agents start with messages; both deliver to the same goal.
  State s = make_state(config(1), layout(Movement::stationary, true), kCells);
  Rng rng(1);
  step(s, acts({Action::up, Action::up}), rng);
  StepResult r = step(s, acts({Action::up, Action::up}), rng);
  EXPECT_FALSE(r.win);
  EXPECT_FALSE(r.done);
  while (!r.done) r = step(s, acts({Action::stay, Action::stay}), rng);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(s.step, 4);
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0}));
}

TEST(Step, EnemyContactLosesForAll) {
  std::array<GridPos, 5> cells = kCells;
  cells[0] = {5, 6};
  State s = make_state(config(2), layout(), cells);
  Rng rng(1);
  const StepResult r = step(s, acts({Action::right, Action::stay}), rng);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0}));
}

TEST(Step, EnemyResolvesBeforeDelivery) {
  std::array<GridPos, 5> cells = kCells;
  cells[0] = {5, 6};
  State s = make_state(config(1), layout(Movement::stationary, true), cells);
  Rng rng(1);
  const StepResult r = step(s, acts({Action::right, Action::up}), rng);  // agent 1 nears goal
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
}

TEST(Step, GoalWithoutMessageLoses) {
  State s = make_state(config(3), layout(), kCells);
  Rng rng(1);
  step(s, acts({Action::up, Action::stay}), rng);
  const StepResult r = step(s, acts({Action::up, Action::stay}), rng);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0}));
}

TEST(Step, S3PickupPaysExactlyPointTwo) {
  State s = make_state(config(3), layout(), kCells);
  Rng rng(1);
  StepResult r = step(s, acts({Action::right, Action::stay}), rng);
  EXPECT_EQ(r.rewards[0], 0.0);
  r = step(s, acts({Action::right, Action::stay}), rng);
  EXPECT_EQ(r.rewards[0], 0.2);
  EXPECT_EQ(r.rewards[1], 0.0);
  EXPECT_TRUE(s.agents[0].has_message);
  EXPECT_EQ(s.episode_return(0), 0.2);
}

TEST(Step, S3FullDeliveryWins) {
  State s = make_state(config(3), layout(), kCells);
  Rng rng(1);
  // Both agents pick up a message, then deliver to the same goal (7,5), allowed at S3.
  const std::vector<std::vector<Action>> plan{
      {Action::right, Action::left}, {Action::right, Action::left}, {Action::down, Action::down},
      {Action::down, Action::down},  {Action::left, Action::right}, {Action::left, Action::right}};
  StepResult r;
  for (const auto& a : plan) {
    ASSERT_FALSE(s.done);
    r = step(s, a, rng);
  }
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.win);
  EXPECT_EQ(s.episode_return(0), 1.2);
  EXPECT_EQ(s.episode_return(0), 0.2 + 1.0);
}

TEST(Step, S3IdleTimesOut) {
  State s = make_state(config(3), layout(), kCells);
  Rng rng(1);
  StepResult r;
  while (!s.done) r = step(s, acts({Action::stay, Action::stay}), rng);
  EXPECT_EQ(s.step, 64);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0}));
  EXPECT_THROW(step(s, acts({Action::stay, Action::stay}), rng), EpisodeError);
}

TEST(Step, HoldingAgentIgnoresSecondMessage) {
  State s = make_state(config(3), layout(), kCells);
  s.agents[0].has_message = true;
  Rng rng(1);
  step(s, acts({Action::right, Action::stay}), rng);
  const StepResult r = step(s, acts({Action::right, Action::stay}), rng);
  EXPECT_EQ(r.rewards[0], 0.0);
  EXPECT_TRUE(s.entity(1).alive);
}

TEST(EntityMove, Examples) {
  Rng rng(1);
  const GridSize g{10, 10};
  Entity e{0, 2, "dog", MessengerTags{Role::enemy, Movement::stationary}, {5, 5}, true};
  const std::vector<GridPos> far{{5, 9}};
  EXPECT_EQ(entity_move(e, far, g, rng), Action::stay);
  e.tags = MessengerTags{Role::enemy, Movement::chasing};
  EXPECT_EQ(entity_move(e, far, g, rng), Action::right);
  e.tags = MessengerTags{Role::enemy, Movement::fleeing};
  e.pos = {0, 0};
  const std::vector<GridPos> near{{0, 1}};
  EXPECT_EQ(entity_move(e, near, g, rng), Action::down);
}

TEST(EntityMove, RandomWalkIsUniform) {
  Rng rng = Rng::split(5, "entity-move");
  Entity e{0, 2, "dog", MessengerTags{Role::goal, Movement::random}, {5, 5}, true};
  const std::vector<GridPos> agents{{1, 1}};
  std::map<Action, int> hist;
  constexpr int kN = 100000;
  for (int i = 0; i < kN; ++i) ++hist[entity_move(e, agents, GridSize{10, 10}, rng)];
  EXPECT_EQ(hist.count(Action::stay), 0u);
  for (Action a : kMoveActions) EXPECT_NEAR(static_cast<double>(hist[a]) / kN, 0.25, 0.01);
}

TEST(Observation, PermutationBlindness) {
  // Same geometry, permuted roles: identical symbol grid, different manual.
  RoleAssignment a = layout();
  RoleAssignment c = a;
  c.entities[0].role = Role::goal;     // dog
  c.entities[3].role = Role::enemy;    // queen
  const State sa = make_state(config(1), a, kCells);
  const State sc = make_state(config(1), c, kCells);
  EXPECT_EQ(render_symbols(sa, 0), render_symbols(sc, 0));
  Rng ra(4), rc(4);
  const auto ma = text::render_messenger_manual(a, Stage{1}, Split::train, res(), ra);
  const auto mc = text::render_messenger_manual(c, Stage{1}, Split::train, res(), rc);
  EXPECT_NE(ma.sentences, mc.sentences);
}

TEST(Observation, AgentSymbols) {
  State s = make_state(config(1), layout(), kCells);
  s.agents[1].pos = {9, 9};
  s.agents[1].has_message = true;
  auto g = render_symbols(s, 0);
  EXPECT_EQ(g[5][5], (std::vector<int>{text::kSymbolSelf}));
  EXPECT_EQ(g[9][9], (std::vector<int>{text::kSymbolAllyWithMessage}));
  g = render_symbols(s, 1);
  EXPECT_EQ(g[5][5], (std::vector<int>{text::kSymbolAlly}));
  EXPECT_EQ(g[9][9], (std::vector<int>{text::kSymbolSelfWithMessage}));
}

TEST(Manual, OneSentencePerEntityWithoutSymbols) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    Config c = config(1 + static_cast<int>(seed % 3));
    c.split = seed % 2 ? Split::eval : Split::train;
    auto [s, a] = generate(c, res(), rng);
    Rng mrng(seed);
    const auto m = text::render_messenger_manual(a, c.stage, c.split, res(), mrng);
    EXPECT_EQ(m.sentences.size(), 5u);
    const auto& ids = res().splits.messenger(c.split).template_ids;
    for (std::size_t i = 0; i < m.sentences.size(); ++i) {
      EXPECT_NE(std::find(ids.begin(), ids.end(), m.provenance[i].template_id), ids.end());
      for (char ch : m.sentences[i]) EXPECT_FALSE(std::isdigit(static_cast<unsigned char>(ch)));
    }
    EXPECT_EQ(text::reconstruct(m, *res().corpus).sentences, m.sentences);
  }
}

}  // namespace
}  // namespace langgrid::messenger
