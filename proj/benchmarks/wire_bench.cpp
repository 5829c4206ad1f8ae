#include <benchmark/benchmark.h>

#include "langgrid/wire.hpp"

namespace {

// Request parsing, one step and response serialisation, without sockets.
void BM_SessionStep(benchmark::State& state) {
  langgrid::wire::Session s;
  const std::string reset = R"({"cmd":"reset","env":"rtfm","stage":1,"seed":7})";
  const std::string step = R"({"cmd":"step","actions":["stay","stay"]})";
  s.handle(reset);
  int t = 0;
  for (auto _ : state) {
    if (++t == 900) {
      state.PauseTiming();
      s.handle(reset);
      t = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(s.handle(step));
  }
}
BENCHMARK(BM_SessionStep);

}  // namespace
