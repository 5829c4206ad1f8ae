// The distro's benchmark_main archive carries LTO bytecode from another GCC,
// so the entry point is defined here.
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
