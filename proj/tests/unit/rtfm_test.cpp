#include <gtest/gtest.h>

#include <set>

#include "langgrid/error.hpp"
#include "langgrid/rtfm.hpp"

namespace langgrid::rtfm {
namespace {

const text::Resources& res() { return text::Resources::builtin(); }

std::pair<State, Assignment> make(int stage, std::uint64_t seed, int n_agents = 2,
                                  Split split = Split::train, int grid = 8) {
  Config c;
  c.stage = Stage{stage};
  c.n_agents = n_agents;
  c.split = split;
  c.grid = grid;
  Rng rng(seed);
  return generate(c, res(), rng);
}

std::vector<Action> all(int n, Action a) { return std::vector<Action>(static_cast<std::size_t>(n), a); }

/// Moves every entity out of the way into the bottom row, keeping cells distinct.
void park(State& s) {
  int col = 0;
  for (Entity& e : s.entities) e.pos = {s.config.grid - 1, col++};
}

TEST(Generate, S1HasFourStationaryEntities) {
  auto [s, a] = make(1, 7);
  EXPECT_EQ(s.entities.size(), 4u);
  EXPECT_EQ(s.agents.size(), 2u);
  EXPECT_FALSE(a.distractor_monster);
  EXPECT_TRUE(a.one_to_one);
  Rng rng(1);
  std::vector<GridPos> before;
  for (const Entity& e : s.entities) before.push_back(e.pos);
  for (int t = 0; t < 20 && !s.done; ++t) step(s, all(2, Action::stay), rng);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(s.entities[i].pos, before[i]);
}

TEST(Generate, S2AddsDistractors) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto [s, a] = make(2, seed);
    EXPECT_EQ(s.entities.size(), 6u);
    ASSERT_TRUE(a.distractor_monster && a.distractor_item);
    EXPECT_EQ(s.entity(*a.distractor_monster).rtfm().kind, RtfmKind::monster);
    EXPECT_EQ(s.entity(*a.distractor_item).rtfm().kind, RtfmKind::item);
    EXPECT_NE(a.team_of(s.entity(*a.distractor_monster).rtfm().word), a.target_team);
  }
}

TEST(Generate, Deterministic) {
  auto [s1, a1] = make(1, 7);
  auto [s2, a2] = make(1, 7);
  EXPECT_EQ(a1.canonical(), a2.canonical());
  for (std::size_t i = 0; i < s1.entities.size(); ++i) {
    EXPECT_EQ(s1.entities[i].pos, s2.entities[i].pos);
    EXPECT_EQ(s1.entities[i].name, s2.entities[i].name);
  }
  for (std::size_t i = 0; i < s1.agents.size(); ++i) EXPECT_EQ(s1.agents[i].pos, s2.agents[i].pos);
}

TEST(Generate, AssignmentInvariants) {
  for (int stage = 1; stage <= 5; ++stage) {
    for (Split split : {Split::train, Split::eval, Split::eval_new}) {
      for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto [s, a] = make(stage, seed, 2, split);
        const text::RtfmSplitSets& sets = res().splits.rtfm(split);
        ASSERT_EQ(a.target_monsters.size(), 2u);
        ASSERT_EQ(a.correct_items.size(), 2u);
        for (std::size_t k = 0; k < 2; ++k) {
          const Entity& m = s.entity(a.target_monsters[k]);
          const Entity& item = s.entity(a.correct_items[k]);
          EXPECT_EQ(a.team_of(m.rtfm().word), a.target_team);
          EXPECT_TRUE(a.beats(item.rtfm().modifier, m.rtfm().element));
        }
        for (const auto& p : a.monster_team) EXPECT_TRUE(sets.monster_team.count(p));
        for (const auto& p : a.modifier_element) EXPECT_TRUE(sets.modifier_element.count(p));
        for (const Entity& e : s.entities) {
          if (e.rtfm().kind == RtfmKind::item) {
            EXPECT_NE(std::find(sets.weapons.begin(), sets.weapons.end(), e.rtfm().word),
                      sets.weapons.end());
          }
        }
        std::set<GridPos> cells;
        for (const Entity& e : s.entities) cells.insert(e.pos);
        for (const AgentState& ag : s.agents) cells.insert(ag.pos);
        EXPECT_EQ(cells.size(), s.entities.size() + s.agents.size());
        EXPECT_EQ(a.one_to_one, stage <= 3);
        if (stage >= 4) {
          EXPECT_GT(a.monster_team.size(), s.entities.size() / 2) << "manual lists absent monsters";
        }
      }
    }
  }
}

TEST(Config, Validation) {
  Config c;
  c.grid = 10;
  EXPECT_THROW(c.validate(), ConfigError);
  c.split = Split::eval;
  EXPECT_NO_THROW(c.validate());
  c.stage = Stage{6};
  EXPECT_THROW(c.validate(), ConfigError);
  Config many;
  many.n_agents = 4;
  many.stage = Stage{2};
  Rng rng(1);
  EXPECT_THROW(generate(many, res(), rng), GenerationError);
}

TEST(Step, IdleReturnIsExact) {
  auto [s, a] = make(1, 3);
  Rng rng(1);
  for (int t = 1; t <= 10; ++t) {
    const StepResult r = step(s, all(2, Action::stay), rng);
    EXPECT_EQ(r.rewards[0], -0.02);
    EXPECT_FALSE(r.done);
  }
  EXPECT_EQ(s.episode_return(0), -0.02 * 10);
  EXPECT_EQ(s.episode_return(1), -0.2);
}

TEST(Step, TimeoutAtMaxSteps) {
  auto [s, a] = make(1, 3);
  Rng rng(1);
  StepResult r;
  int t = 0;
  while (!s.done) {
    r = step(s, all(2, Action::stay), rng);
    ++t;
  }
  EXPECT_EQ(t, 1000);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(s.episode_return(0), -0.02 * 1000);
  EXPECT_THROW(step(s, all(2, Action::stay), rng), EpisodeError);
}

TEST(Step, WrongActionCountThrows) {
  auto [s, a] = make(1, 3);
  Rng rng(1);
  EXPECT_THROW(step(s, all(3, Action::stay), rng), EpisodeError);
  EXPECT_EQ(s.step, 0);
}

TEST(Step, KillingLastTargetWins) {
  auto [s, a] = make(1, 11);
  park(s);
  // Agent 1 already killed the other target.
  s.entities[static_cast<std::size_t>(a.target_monsters[1])].alive = false;
  s.agents[0].inventory = a.correct_items[0];
  s.entities[static_cast<std::size_t>(a.correct_items[0])].alive = false;
  s.entities[static_cast<std::size_t>(a.target_monsters[0])].pos = {2, 3};
  s.agents[0].pos = {2, 2};
  s.agents[1].pos = {0, 0};
  Rng rng(1);
  const std::array<Action, 2> acts{Action::right, Action::stay};
  const StepResult r = step(s, acts, rng);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.win);
  EXPECT_EQ(r.rewards[0], 1 - 0.02);
  EXPECT_EQ(r.rewards[0], 0.98);
  EXPECT_EQ(r.rewards[1], -0.02);
}

TEST(Step, DistractorLoses) {
  auto [s, a] = make(2, 5);
  park(s);
  s.entities[static_cast<std::size_t>(*a.distractor_monster)].pos = {3, 4};
  s.agents[0].pos = {3, 3};
  s.agents[1].pos = {0, 0};
  Rng rng(1);
  const std::array<Action, 2> acts{Action::right, Action::stay};
  const StepResult r = step(s, acts, rng);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.rewards[0], -1 - 0.02);
  EXPECT_EQ(r.rewards[1], -0.02);
  EXPECT_EQ(s.episode_return(0), -1.02);
}

TEST(Step, DistractorKilledWithDistractorItemStillLoses) {
  auto [s, a] = make(2, 5);
  park(s);
  s.agents[0].inventory = *a.distractor_item;
  s.entities[static_cast<std::size_t>(*a.distractor_item)].alive = false;
  s.entities[static_cast<std::size_t>(*a.distractor_monster)].pos = {3, 4};
  s.agents[0].pos = {3, 3};
  s.agents[1].pos = {0, 0};
  Rng rng(1);
  const std::array<Action, 2> acts{Action::right, Action::stay};
  const StepResult r = step(s, acts, rng);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.events.front().kind, "kill_distractor");
  EXPECT_EQ(r.rewards[0], -1.02);
}

TEST(Step, UnarmedEngagementLoses) {
  auto [s, a] = make(1, 5);
  park(s);
  s.entities[static_cast<std::size_t>(a.target_monsters[0])].pos = {3, 4};
  s.agents[0].pos = {3, 3};
  s.agents[1].pos = {0, 0};
  Rng rng(1);
  const std::array<Action, 2> acts{Action::right, Action::stay};
  const StepResult r = step(s, acts, rng);
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.win);
  EXPECT_EQ(r.events.front().kind, "unarmed");
}

TEST(Step, PickupDropsPreviousWeapon) {
  auto [s, a] = make(1, 5);
  park(s);
  s.entities[static_cast<std::size_t>(a.correct_items[0])].pos = {3, 4};
  s.entities[static_cast<std::size_t>(a.correct_items[1])].pos = {3, 5};
  s.agents[0].pos = {3, 3};
  s.agents[1].pos = {0, 0};
  Rng rng(1);
  const std::array<Action, 2> acts{Action::right, Action::stay};
  step(s, acts, rng);
  EXPECT_EQ(s.agents[0].inventory, a.correct_items[0]);
  const StepResult r = step(s, acts, rng);
  EXPECT_EQ(s.agents[0].inventory, a.correct_items[1]);
  EXPECT_EQ(r.events[0].kind, "drop");
  EXPECT_FALSE(s.entity(a.correct_items[0]).alive);  // dropped weapon left play
  for (const Entity& e : s.entities) {
    if (e.rtfm().kind == RtfmKind::item && e.alive) EXPECT_NE(e.pos, s.agents[0].pos);
  }
}

TEST(Step, RewardAccountingProperty) {
  // Random play: the ledger return equals kills - losses - 0.02 * steps, and
  // win excludes any loss event.
  for (int stage = 1; stage <= 5; ++stage) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto [s, a] = make(stage, seed);
      Rng policy(seed + 1000);
      Rng dyn(seed + 2000);
      std::vector<int> kills(2, 0), losses(2, 0);
      bool saw_loss = false;
      while (!s.done) {
        std::vector<Action> acts;
        for (int i = 0; i < 2; ++i) acts.push_back(kAllActions[policy.below(5)]);
        const StepResult r = step(s, acts, dyn);
        for (const Event& e : r.events) {
          if (e.kind == "kill") ++kills[static_cast<std::size_t>(e.agent)];
          if (e.kind == "unarmed" || e.kind == "distractor" || e.kind == "kill_distractor") {
            ++losses[static_cast<std::size_t>(e.agent)];
            saw_loss = true;
          }
        }
        for (const AgentState& ag : s.agents) {
          int held = ag.inventory ? 1 : 0;
          EXPECT_LE(held, 1);
        }
      }
      for (int i = 0; i < 2; ++i) {
        const double expected = kills[static_cast<std::size_t>(i)] -
                                losses[static_cast<std::size_t>(i)] + -0.02 * s.step;
        EXPECT_EQ(s.episode_return(i), expected);
      }
      if (s.win) {
        EXPECT_FALSE(saw_loss);
        EXPECT_TRUE(s.alive_targets().empty());
      }
    }
  }
}

TEST(MonsterDirection, Examples) {
  Rng rng(1);
  const std::vector<GridPos> same{{3, 3}};
  EXPECT_EQ(monster_direction({3, 3}, same, 1.0, rng), Action::stay);
  const std::vector<GridPos> below{{2, 0}};
  EXPECT_EQ(monster_direction({0, 0}, below, 1.0, rng), Action::down);
  EXPECT_THROW(monster_direction({0, 0}, {}, 0.6, rng), PreconditionError);
}

TEST(MonsterDirection, ChaseMixture) {
  Rng rng = Rng::split(99, "monster-move");
  const std::vector<GridPos> agent{{4, 0}};
  int left = 0;
  constexpr int kN = 100000;
  for (int i = 0; i < kN; ++i) left += monster_direction({4, 4}, agent, 0.6, rng) == Action::left;
  EXPECT_NEAR(static_cast<double>(left) / kN, 0.7, 0.01);
}

TEST(Render, TextMatrix) {
  auto [s, a] = make(1, 7);
  const TextGrid g = render_grid(s, 1);
  int you = 0, ally = 0, names = 0;
  for (const auto& row : g) {
    for (const auto& cell : row) {
      for (const auto& w : cell) {
        you += w == "you";
        ally += w == "ally";
        names += w != "you" && w != "ally";
      }
    }
  }
  EXPECT_EQ(you, 1);
  EXPECT_EQ(ally, 1);
  EXPECT_EQ(names, 4);
  const GridPos p = s.entity(a.correct_items[0]).pos;
  EXPECT_EQ(g[static_cast<std::size_t>(p.row)][static_cast<std::size_t>(p.col)].front(),
            s.entity(a.correct_items[0]).name);
}

}  // namespace
}  // namespace langgrid::rtfm
