// langgrid command line: gen | play | eval | serve | check | corpus.
//
// Exit codes: 0 success, 1 a check or verification failed, 2 usage or
// configuration error.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "langgrid/agents.hpp"
#include "langgrid/checks.hpp"
#include "langgrid/corpus.hpp"
#include "langgrid/error.hpp"
#include "langgrid/game.hpp"
#include "langgrid/splits.hpp"
#include "langgrid/wire.hpp"

namespace fs = std::filesystem;
using namespace langgrid;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct EpisodeFlags {
  std::string env = "rtfm";
  std::string stage = "S1";
  std::string split = "train";
  std::uint64_t seed = 0;
  int agents = 2;
  int grid = 0;
};

void add_episode_flags(CLI::App* cmd, EpisodeFlags& f) {
  cmd->add_option("--env", f.env, "rtfm or messenger")->capture_default_str();
  cmd->add_option("--stage", f.stage, "S1..S5 (RTFM) or S1..S3 (MESSENGER)")->capture_default_str();
  cmd->add_option("--split", f.split, "train, eval or eval_new")->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed")->capture_default_str();
  cmd->add_option("--agents", f.agents, "number of agents")->capture_default_str();
  cmd->add_option("--grid", f.grid, "grid side, 0 for the environment default")->capture_default_str();
}

EpisodeSpec to_spec(const EpisodeFlags& f) {
  EpisodeSpec s;
  const auto env = parse_env(f.env);
  if (!env) throw ConfigError("--env must be rtfm or messenger, got '" + f.env + "'");
  const auto stage = parse_stage(f.stage);
  if (!stage) throw ConfigError("--stage must look like S1, got '" + f.stage + "'");
  const auto split = parse_split(f.split);
  if (!split) throw ConfigError("--split must be train, eval or eval_new, got '" + f.split + "'");
  s.env = *env;
  s.stage = *stage;
  s.split = *split;
  s.seed = f.seed;
  s.n_agents = f.agents;
  s.grid = f.grid;
  s.validate();
  return s;
}

std::string stem(const EpisodeSpec& s) {
  std::ostringstream os;
  os << to_string(s.env) << "_S" << s.stage.value << "_" << to_string(s.split) << "_" << s.seed;
  return os.str();
}

int cmd_gen(const EpisodeFlags& f, int episodes, const std::string& policy_name, const std::string& out) {
  const agents::Policy policy = agents::policy_by_name(policy_name);
  EpisodeSpec base = to_spec(f);
  fs::create_directories(out);
  for (int i = 0; i < episodes; ++i) {
    EpisodeSpec spec = base;
    spec.seed = base.seed + static_cast<std::uint64_t>(i);
    Rng rng = Rng(spec.seed).child("policy");
    const Episode ep = agents::run_episode(policy, spec, rng);
    const fs::path t = fs::path(out) / (stem(spec) + ".transcript");
    const fs::path m = fs::path(out) / (stem(spec) + ".manual.txt");
    std::ofstream(t) << ep.transcript().to_text();
    std::ofstream mf(m);
    mf << "goal: " << ep.manual().goal << '\n';
    for (const std::string& s : ep.manual().sentences) mf << s << '\n';
    std::cout << t.string() << '\n' << m.string() << '\n';
  }
  return 0;
}

std::optional<Action> key_action(char c) {
  switch (c) {
    case 'w': return Action::up;
    case 's': return Action::down;
    case 'a': return Action::left;
    case 'd': return Action::right;
    case 'x': return Action::stay;
    default: return std::nullopt;
  }
}

/// Manual play reads one line per step with one key per agent (w/a/s/d/x).
int cmd_play(const EpisodeFlags& f, const std::string& policy_name, int max_steps) {
  const EpisodeSpec spec = to_spec(f);
  Episode ep(spec);
  const bool keyboard = policy_name == "manual";
  const agents::Policy policy = keyboard ? agents::Policy{} : agents::policy_by_name(policy_name);
  Rng rng = Rng(spec.seed).child("policy");
  std::cout << "goal: " << ep.manual().goal << '\n';
  for (const std::string& s : ep.manual().sentences) std::cout << "  " << s << '\n';
  while (!ep.done() && (max_steps <= 0 || ep.step_count() < max_steps)) {
    std::cout << "\nstep " << ep.step_count() << '\n' << ep.render();
    std::vector<Action> actions;
    if (keyboard) {
      std::cout << "keys (" << ep.n_agents() << " of w/a/s/d/x)> " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line)) break;
      for (char c : line) {
        if (auto a = key_action(c)) actions.push_back(*a);
      }
      if (static_cast<int>(actions.size()) != ep.n_agents()) {
        std::cout << "need exactly " << ep.n_agents() << " keys\n";
        continue;
      }
    } else {
      actions = policy(ep, rng);
    }
    const StepOutcome out = ep.step(actions);
    std::cout << "actions";
    for (Action a : actions) std::cout << ' ' << to_string(a);
    std::cout << "  rewards";
    for (double r : out.rewards) std::cout << ' ' << format_double(r);
    for (const Event& e : out.events) std::cout << "  " << e.token();
    std::cout << '\n';
  }
  std::cout << "\n" << ep.render() << (ep.win() ? "win" : ep.done() ? "loss" : "stopped") << " after "
            << ep.step_count() << " steps\n";
  return 0;
}

int cmd_eval(const EpisodeFlags& f, const std::string& policy_name, int episodes) {
  const agents::EvalReport r = agents::evaluate(agents::policy_by_name(policy_name), to_spec(f), episodes, f.seed);
  std::cout << r.to_text();
  return 0;
}

wire::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const std::string& host, int port, bool stdio) {
  if (stdio) {
    wire::serve_stream(std::cin, std::cout);
    return 0;
  }
  wire::Server server(host, static_cast<std::uint16_t>(port));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << host << ":" << server.port() << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_check(const std::vector<int>& ids) {
  std::vector<int> run = ids;
  if (run.empty()) {
    for (int i = 1; i <= checks::kNumChecks; ++i) run.push_back(i);
  }
  bool all = true;
  for (int id : run) {
    const checks::CheckResult r = checks::run_check(id);
    std::cout << r.line() << std::endl;
    all = all && r.pass;
  }
  return all ? 0 : kExitFailed;
}

int cmd_corpus(bool verify, const std::string& file, bool dump) {
  if (dump) {
    std::cout << text::TemplateCorpus::builtin_text();
    return 0;
  }
  std::optional<text::TemplateCorpus> loaded;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read corpus file '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    loaded = text::TemplateCorpus::parse(ss.str());
  }
  const text::TemplateCorpus& corpus = loaded ? *loaded : text::TemplateCorpus::builtin();
  const text::CorpusCounts c = corpus.counts();
  std::cout << "rtfm templates: " << c.goal_templates << "/" << c.team_templates << "/"
            << c.modifier_templates << '\n';
  std::cout << "messenger: " << c.messenger_templates << "x" << c.fillings_per_template << "="
            << c.messenger_descriptions << '\n';
  Rng rng(text::kDefaultSplitSeed);
  const text::SplitSpec splits = text::make_splits(rng, corpus);
  std::cout << "split digest: " << splits.digest() << '\n';
  if (!verify) return 0;
  try {
    corpus.verify();
  } catch (const FormatError& e) {
    std::cerr << "corpus verification failed: " << e.what() << '\n';
    return kExitFailed;
  }
  const checks::CheckResult split = checks::run_check(6);
  std::cout << split.line() << '\n';
  if (!split.pass) return kExitFailed;
  std::cout << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"langgrid: multi-agent language-grounded grid games"};
  app.require_subcommand(1);

  EpisodeFlags gen_f, play_f, eval_f;
  int gen_episodes = 1, eval_episodes = 100, play_steps = 0;
  std::string gen_policy = "random", play_policy = "oracle", eval_policy = "oracle", out;

  CLI::App* gen = app.add_subcommand("gen", "write episode transcripts and manuals");
  add_episode_flags(gen, gen_f);
  gen->add_option("--episodes", gen_episodes, "episodes, seeds seed..seed+n-1")->check(CLI::PositiveNumber);
  gen->add_option("--policy", gen_policy, "oracle, random or stay")->capture_default_str();
  gen->add_option("--out", out, "output directory")->required();

  CLI::App* play = app.add_subcommand("play", "step through one episode in the terminal");
  add_episode_flags(play, play_f);
  play->add_option("--policy", play_policy, "oracle, random, stay or manual")->capture_default_str();
  play->add_option("--max-steps", play_steps, "stop after this many steps (0: no limit)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a scripted policy");
  add_episode_flags(eval, eval_f);
  eval->add_option("--policy", eval_policy, "oracle, random or stay")->capture_default_str();
  eval->add_option("--episodes", eval_episodes, "episodes")->check(CLI::PositiveNumber);

  std::string host = "127.0.0.1";
  int port = 7878;
  bool stdio = false;
  CLI::App* serve = app.add_subcommand("serve", "run the line protocol server");
  CLI::Option* host_opt = serve->add_option("--host", host, "IPv4 address")->capture_default_str();
  CLI::Option* port_opt = serve->add_option("--port", port, "TCP port, 0 picks one")->check(CLI::Range(0, 65535));
  serve->add_flag("--stdio", stdio, "serve one session on stdin/stdout")->excludes(host_opt)->excludes(port_opt);

  std::vector<int> check_ids;
  CLI::App* check = app.add_subcommand("check", "run the acceptance and invariant suites");
  check->add_option("--id", check_ids, "run only these checks (1..11)")->check(CLI::Range(1, checks::kNumChecks));

  bool verify = false, dump = false;
  std::string corpus_file;
  CLI::App* corpus = app.add_subcommand("corpus", "template counts, split digest and verification");
  CLI::Option* verify_opt = corpus->add_flag("--verify", verify, "check counts, blanks and split disjointness");
  CLI::Option* file_opt = corpus->add_option("--file", corpus_file, "corpus file instead of the built-in one");
  corpus->add_flag("--dump", dump, "print the built-in corpus")->excludes(verify_opt)->excludes(file_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_f, gen_episodes, gen_policy, out);
    if (*play) return cmd_play(play_f, play_policy, play_steps);
    if (*eval) return cmd_eval(eval_f, eval_policy, eval_episodes);
    if (*serve) return cmd_serve(host, port, stdio);
    if (*check) return cmd_check(check_ids);
    if (*corpus) return cmd_corpus(verify, corpus_file, dump);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return 0;
}
