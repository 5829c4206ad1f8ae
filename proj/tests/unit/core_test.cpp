#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "langgrid/error.hpp"
#include "langgrid/rng.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/types.hpp"

namespace langgrid {
namespace {

IntMap map_of(std::vector<std::vector<int>> rows) {
  IntMap m{static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), {}};
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

TEST(Manhattan, Examples) {
  EXPECT_EQ(manhattan({0, 0}, {0, 0}), 0);
  EXPECT_EQ(manhattan({0, 0}, {2, 3}), 5);
  EXPECT_EQ(manhattan({7, 0}, {0, 7}), 14);
}

TEST(PositionalFeature, Examples) {
  EXPECT_EQ(positional_feature({0, 0}, 2, 2), map_of({{0, 1}, {1, 2}}));
  EXPECT_EQ(positional_feature({1, 1}, 3, 3), map_of({{2, 1, 2}, {1, 0, 1}, {2, 1, 2}}));
  EXPECT_EQ(positional_feature({0, 2}, 1, 3), map_of({{2, 1, 0}}));
}

TEST(PositionalFeature, OffGridThrows) {
  EXPECT_THROW(positional_feature({2, 0}, 2, 2), PreconditionError);
  EXPECT_THROW(positional_feature({0, -1}, 2, 2), PreconditionError);
}

TEST(PositionalFeature, SymmetricUnderReflectionsFixingPos) {
  // Centre of an odd grid is fixed by both reflections.
  for (int n : {3, 5, 7}) {
    const GridPos c{n / 2, n / 2};
    const IntMap m = positional_feature(c, n, n);
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        EXPECT_EQ(m.at(r, col), m.at(n - 1 - r, col));
        EXPECT_EQ(m.at(r, col), m.at(r, n - 1 - col));
        EXPECT_EQ(m.at(r, col), m.at(col, r));
      }
    }
  }
  // A cell on the middle row of an odd-height grid is fixed by the vertical flip.
  const IntMap m = positional_feature({2, 1}, 5, 4);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m.at(r, c), m.at(4 - r, c));
  }
}

TEST(JointPositionalFeature, Examples) {
  const std::vector<GridPos> one{{0, 0}};
  EXPECT_EQ(joint_positional_feature(one, 2, 2), map_of({{0, 1}, {1, 2}}));
  const std::vector<GridPos> two{{0, 0}, {1, 1}};
  EXPECT_EQ(joint_positional_feature(two, 2, 2), map_of({{0, 1}, {1, 0}}));
  const std::vector<GridPos> row{{0, 0}, {0, 1}};
  EXPECT_EQ(joint_positional_feature(row, 1, 2), map_of({{0, 0}}));
}

TEST(JointPositionalFeature, EmptyThrows) {
  try {
    joint_positional_feature({}, 2, 2);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("no other agents"), std::string::npos);
  }
}

TEST(JointPositionalFeature, IsCellwiseMinimum) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GridPos> others;
    const int k = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < k; ++i) {
      others.push_back({static_cast<int>(rng.below(6)), static_cast<int>(rng.below(7))});
    }
    const IntMap joint = joint_positional_feature(others, 6, 7);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 7; ++c) {
        int best = std::numeric_limits<int>::max();
        for (const GridPos& p : others) best = std::min(best, positional_feature(p, 6, 7).at(r, c));
        EXPECT_EQ(joint.at(r, c), best);
      }
    }
  }
}

TEST(Moves, OffGridResolvesToStay) {
  const GridSize g{3, 3};
  EXPECT_EQ(apply_move({0, 0}, Action::up, g), (GridPos{0, 0}));
  EXPECT_EQ(apply_move({0, 0}, Action::left, g), (GridPos{0, 0}));
  EXPECT_EQ(apply_move({2, 2}, Action::down, g), (GridPos{2, 2}));
  EXPECT_EQ(apply_move({1, 1}, Action::right, g), (GridPos{1, 2}));
}

TEST(Moves, GreedyTieBreak) {
  EXPECT_EQ(greedy_step_toward({0, 0}, {2, 0}), Action::down);
  EXPECT_EQ(greedy_step_toward({4, 4}, {4, 0}), Action::left);
  EXPECT_EQ(greedy_step_toward({3, 3}, {3, 3}), Action::stay);
  EXPECT_EQ(greedy_step_toward({0, 0}, {2, 2}), Action::down);  // rows win ties
  EXPECT_EQ(greedy_step_toward({5, 5}, {4, 1}), Action::left);   // larger axis first
}

TEST(Actions, RoundTrip) {
  for (Action a : kAllActions) EXPECT_EQ(parse_action(to_string(a)), a);
  EXPECT_FALSE(parse_action("jump"));
}

TEST(Rng, SplitIsPure) {
  Rng a = Rng::split(42, "spawn");
  Rng b = Rng::split(42, "spawn");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng::split(42, "spawn").next_u64(), Rng::split(42, "gumbel").next_u64());
  EXPECT_NE(Rng::split(42, "spawn").next_u64(), Rng::split(43, "spawn").next_u64());
}

TEST(Rng, StreamsAreIndependent) {
  std::vector<std::uint64_t> reference;
  {
    Rng b = Rng::split(9, "b");
    for (int i = 0; i < 32; ++i) reference.push_back(b.next_u64());
  }
  for (int k : {0, 1, 17, 1000}) {
    Rng a = Rng::split(9, "a");
    Rng b = Rng::split(9, "b");
    for (int i = 0; i < k; ++i) a.next_u64();
    for (int i = 0; i < 32; ++i) EXPECT_EQ(b.next_u64(), reference[static_cast<std::size_t>(i)]);
  }
}

TEST(Rng, UniformAndBelow) {
  Rng rng(1);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[static_cast<std::size_t>(rng.below(6))];
  }
  for (int c : counts) EXPECT_NEAR(c / 60000.0, 1.0 / 6.0, 0.01);
  EXPECT_THROW(rng.below(0), PreconditionError);
}

TEST(Rng, GumbelMean) {
  Rng rng(5);
  double sum = 0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) sum += rng.gumbel();
  EXPECT_NEAR(sum / kN, 0.5772156649, 0.01);  // Euler-Mascheroni constant
}

TEST(Transcript, RoundTrip) {
  Transcript t;
  t.header = {EnvKind::messenger, Stage{3}, Split::eval, 10, 2, 18446744073709551615ull,
              "0123456789abcdef"};
  t.steps.push_back({1, {Action::up, Action::stay}, {-0.02, 0.2}, {"message:a1:u2"}, false, false});
  t.steps.push_back({2, {Action::left, Action::right}, {1, 1}, {"deliver:a0:u3", "win"}, true,
                     true});
  const std::string text = t.to_text();
  EXPECT_EQ(Transcript::parse(text), t);
  EXPECT_EQ(Transcript::parse(text).to_text(), text);
  EXPECT_NE(text.find("rewards=-0.02,0.2"), std::string::npos);
}

TEST(Transcript, MalformedThrows) {
  EXPECT_THROW(Transcript::parse("nonsense\n"), FormatError);
  EXPECT_THROW(Transcript::parse(""), FormatError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {-0.02, 0.2, 1.0, -1.02, 0.98, 1e-300, -0.1 * 3}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(-0.02), "-0.02");
  EXPECT_EQ(format_double(1.0), "1");
}

TEST(EventToken, Format) {
  EXPECT_EQ((Event{"kill", 1, 3}.token()), "kill:a1:u3");
  EXPECT_EQ((Event{"win"}.token()), "win");
}

}  // namespace
}  // namespace langgrid
