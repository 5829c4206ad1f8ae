#include "langgrid/transcript.hpp"

#include <charconv>
#include <sstream>

#include "langgrid/error.hpp"

namespace langgrid {

namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_int(std::string_view s, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("transcript: bad integer for " + std::string(what) + ": '" + std::string(s) +
                      "'");
  }
  return value;
}

// Splits "k=v" fields and checks the keys appear in the expected order.
std::vector<std::string_view> fields(std::string_view line,
                                     std::initializer_list<std::string_view> keys,
                                     std::size_t skip) {
  auto words = split_on(line, ' ');
  if (words.size() != keys.size() + skip) {
    throw FormatError("transcript: wrong field count in line '" + std::string(line) + "'");
  }
  std::vector<std::string_view> values;
  std::size_t i = skip;
  for (std::string_view key : keys) {
    std::string_view w = words[i++];
    if (w.size() <= key.size() || w.substr(0, key.size()) != key || w[key.size()] != '=') {
      throw FormatError("transcript: expected field '" + std::string(key) + "'");
    }
    values.push_back(w.substr(key.size() + 1));
  }
  return values;
}

bool parse_flag(std::string_view s) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw FormatError("transcript: flag must be 0 or 1");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad number '" + std::string(s) + "'");
  }
  return v;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::string Transcript::to_text() const {
  std::ostringstream os;
  os << "langgrid-transcript v1 env=" << to_string(header.env)
     << " stage=" << to_string(header.stage) << " split=" << to_string(header.split)
     << " grid=" << header.grid << " agents=" << header.n_agents << " seed=" << header.seed
     << " assignment=" << header.assignment_digest << '\n';
  for (const StepRecord& s : steps) {
    os << "t=" << s.t << " actions=";
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      os << (i ? "," : "") << to_string(s.actions[i]);
    }
    os << " rewards=";
    for (std::size_t i = 0; i < s.rewards.size(); ++i) {
      os << (i ? "," : "") << format_double(s.rewards[i]);
    }
    os << " events=";
    if (s.events.empty()) os << '-';
    for (std::size_t i = 0; i < s.events.size(); ++i) os << (i ? ";" : "") << s.events[i];
    os << " done=" << (s.done ? 1 : 0) << " win=" << (s.win ? 1 : 0) << '\n';
  }
  return os.str();
}

Transcript Transcript::parse(std::string_view text) {
  Transcript tr;
  auto lines = split_on(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw FormatError("transcript: empty input");

  auto head = split_on(lines[0], ' ');
  if (head.size() < 2 || head[0] != "langgrid-transcript" || head[1] != "v1") {
    throw FormatError("transcript: missing 'langgrid-transcript v1' header");
  }
  auto h = fields(lines[0], {"env", "stage", "split", "grid", "agents", "seed", "assignment"}, 2);
  auto env = parse_env(h[0]);
  auto stage = parse_stage(h[1]);
  auto split = parse_split(h[2]);
  if (!env || !stage || !split) throw FormatError("transcript: bad env/stage/split in header");
  tr.header = {*env,
               *stage,
               *split,
               parse_int<int>(h[3], "grid"),
               parse_int<int>(h[4], "agents"),
               parse_int<std::uint64_t>(h[5], "seed"),
               std::string(h[6])};

  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto f = fields(lines[li], {"t", "actions", "rewards", "events", "done", "win"}, 0);
    StepRecord rec;
    rec.t = parse_int<int>(f[0], "t");
    for (std::string_view a : split_on(f[1], ',')) {
      auto act = parse_action(a);
      if (!act) throw FormatError("transcript: unknown action '" + std::string(a) + "'");
      rec.actions.push_back(*act);
    }
    for (std::string_view r : split_on(f[2], ',')) rec.rewards.push_back(parse_double(r));
    if (f[3] != "-") {
      for (std::string_view e : split_on(f[3], ';')) rec.events.emplace_back(e);
    }
    rec.done = parse_flag(f[4]);
    rec.win = parse_flag(f[5]);
    tr.steps.push_back(std::move(rec));
  }
  return tr;
}

}  // namespace langgrid
