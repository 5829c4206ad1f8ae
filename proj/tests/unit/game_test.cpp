#include <gtest/gtest.h>

#include "langgrid/agents.hpp"
#include "langgrid/error.hpp"
#include "langgrid/game.hpp"

namespace langgrid {
namespace {

EpisodeSpec spec_of(EnvKind env, int stage, std::uint64_t seed, int n = 2) {
  EpisodeSpec s;
  s.env = env;
  s.stage = Stage{stage};
  s.seed = seed;
  s.n_agents = n;
  return s;
}

std::string random_transcript(const EpisodeSpec& spec, std::uint64_t policy_seed) {
  Rng rng(policy_seed);
  return agents::run_episode(agents::random_actions, spec, rng).transcript().to_text();
}

TEST(Episode, TranscriptsAreByteIdenticalAcrossRuns) {
  for (EnvKind env : {EnvKind::rtfm, EnvKind::messenger}) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const EpisodeSpec spec = spec_of(env, 1 + static_cast<int>(seed % 3), seed);
      EXPECT_EQ(random_transcript(spec, seed), random_transcript(spec, seed));
    }
  }
}

TEST(Episode, ReplayOfRecordedActionsReproducesTranscript) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EpisodeSpec spec = spec_of(seed % 2 ? EnvKind::messenger : EnvKind::rtfm, 2, seed);
    const Transcript original = Transcript::parse(random_transcript(spec, seed + 100));
    Episode replay(spec);
    for (const StepRecord& r : original.steps) replay.step(r.actions);
    EXPECT_EQ(replay.transcript(), original);
  }
}

TEST(Episode, DifferentSeedsDiffer) {
  const Episode a(spec_of(EnvKind::rtfm, 3, 1));
  const Episode b(spec_of(EnvKind::rtfm, 3, 2));
  EXPECT_NE(a.transcript().header.assignment_digest, b.transcript().header.assignment_digest);
}

TEST(Episode, HeaderEchoesResolvedSpec) {
  const Episode r(spec_of(EnvKind::rtfm, 4, 9, 3));
  EXPECT_EQ(r.transcript().header.grid, 8);
  EXPECT_EQ(r.transcript().header.n_agents, 3);
  EXPECT_EQ(r.transcript().header.stage, Stage{4});
  const Episode m(spec_of(EnvKind::messenger, 1, 9));
  EXPECT_EQ(m.transcript().header.grid, 10);
  EXPECT_EQ(m.transcript().header.env, EnvKind::messenger);
}

TEST(Episode, InvalidSpecsThrowConfigError) {
  EXPECT_THROW(Episode(spec_of(EnvKind::messenger, 4, 1)), ConfigError);
  EXPECT_THROW(Episode(spec_of(EnvKind::rtfm, 6, 1)), ConfigError);
  EXPECT_THROW(Episode(spec_of(EnvKind::rtfm, 1, 1, 0)), ConfigError);
  EpisodeSpec s = spec_of(EnvKind::messenger, 1, 1);
  s.split = Split::eval_new;
  EXPECT_THROW(Episode{s}, ConfigError);
}

TEST(Episode, StepAfterDoneAndBadIndicesThrow) {
  Episode ep(spec_of(EnvKind::messenger, 1, 4));
  const std::vector<Action> stay{Action::stay, Action::stay};
  while (!ep.done()) ep.step(stay);
  EXPECT_THROW(ep.step(stay), EpisodeError);
  EXPECT_THROW(ep.observe(2), PreconditionError);
  EXPECT_THROW(ep.observe(-1), PreconditionError);
}

TEST(Episode, StepCountMatchesTranscript) {
  Episode ep(spec_of(EnvKind::rtfm, 2, 6));
  Rng rng(6);
  for (int t = 0; t < 15 && !ep.done(); ++t) {
    ep.step(agents::random_actions(ep, rng));
    EXPECT_EQ(static_cast<int>(ep.transcript().steps.size()), ep.step_count());
  }
}

}  // namespace
}  // namespace langgrid
