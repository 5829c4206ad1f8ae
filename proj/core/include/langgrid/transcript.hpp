#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "langgrid/types.hpp"

namespace langgrid {

struct TranscriptHeader {
  EnvKind env = EnvKind::rtfm;
  Stage stage;
  Split split = Split::train;
  int grid = 8;
  int n_agents = 2;
  std::uint64_t seed = 0;
  std::string assignment_digest;  // 16 hex digits

  friend bool operator==(const TranscriptHeader&, const TranscriptHeader&) = default;
};

struct StepRecord {
  int t = 0;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<std::string> events;  // tokens without whitespace or ';'
  bool done = false;
  bool win = false;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Episode record: one header line, then one line per step.
///
///   langgrid-transcript v1 env=<rtfm|messenger> stage=S<k> split=<s> grid=<n> agents=<n>
///       seed=<u64> assignment=<hex16>
///   t=<k> actions=<a,..> rewards=<r,..> events=<e;..|-> done=<0|1> win=<0|1>
///
/// (The header is a single line.) Rewards use the shortest decimal form that
/// round-trips to the same 64-bit double.
struct Transcript {
  TranscriptHeader header;
  std::vector<StepRecord> steps;

  std::string to_text() const;
  static Transcript parse(std::string_view text);

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// Shortest round-trip decimal representation of `v`.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string hex64(std::uint64_t v);

}  // namespace langgrid
