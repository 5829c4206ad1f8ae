#include <benchmark/benchmark.h>

#include "langgrid/division.hpp"
#include "langgrid/game.hpp"

namespace {

using namespace langgrid;
using namespace langgrid::division;

View bench_view(int n_agents) {
  EpisodeSpec s;
  s.stage = Stage{5};
  s.n_agents = n_agents;
  s.seed = 11;
  return make_view(Episode(s), 0);
}

// Forward pass only; range(0) is the embedding width.
void BM_EndiStep(benchmark::State& state) {
  const Vocabulary& vocab = Vocabulary::builtin();
  const int d = static_cast<int>(state.range(0));
  Rng prng(1);
  const Params p = Params::random(vocab.size(), d, 2, prng);
  const View v = bench_view(2);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(endi_step(v, p, vocab, rng).self_logits);
}
BENCHMARK(BM_EndiStep)->Arg(8)->Arg(16)->Arg(32);

// Forward and backward through the full loss.
void BM_EndiLoss(benchmark::State& state) {
  const Vocabulary& vocab = Vocabulary::builtin();
  const int d = static_cast<int>(state.range(0));
  Rng prng(1);
  const Params p = Params::random(vocab.size(), d, 2, prng);
  const View v = bench_view(2);
  LossInputs in;
  in.self_action = Action::up;
  in.advantage = 0.5;
  in.others_actions = {Action::left};
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(endi_loss(v, p, vocab, in, LossWeights{}, rng).total);
}
BENCHMARK(BM_EndiLoss)->Arg(8)->Arg(16)->Arg(32);

void BM_GumbelMask(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  ad::Tensor logits({k, 2});
  Rng init(4);
  for (double& x : logits.data()) x = init.uniform() * 4.0 - 2.0;
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(gumbel_mask(logits, 1.0, rng).mask);
}
BENCHMARK(BM_GumbelMask)->Arg(4)->Arg(16);

}  // namespace
