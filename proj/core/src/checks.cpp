#include "langgrid/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "langgrid/agents.hpp"
#include "langgrid/division.hpp"
#include "langgrid/error.hpp"
#include "langgrid/gradcheck.hpp"
#include "langgrid/rtfm.hpp"
#include "langgrid/splits.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::checks {

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

EpisodeSpec spec_of(EnvKind env, int stage, std::uint64_t seed = 0, Split split = Split::train) {
  EpisodeSpec s;
  s.env = env;
  s.stage = Stage{stage};
  s.seed = seed;
  s.split = split;
  return s;
}

int max_stage(EnvKind env) { return env == EnvKind::rtfm ? 5 : 3; }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// 1. Three independent routes to the same transcript must agree byte for byte:
// a policy run, a second policy run, and a replay of the recorded actions.
Verdict determinism() {
  int triples = 0, mismatches = 0;
  for (EnvKind env : {EnvKind::rtfm, EnvKind::messenger}) {
    for (int i = 0; i < 100; ++i) {
      const int stage = 1 + i % max_stage(env);
      const std::uint64_t seed = derive_seed(0xD17E, to_string(env), static_cast<std::uint64_t>(i));
      const EpisodeSpec spec = spec_of(env, stage, seed);
      Rng r1 = Rng(seed).child("policy");
      Rng r2 = Rng(seed).child("policy");
      const std::string a = agents::run_episode(agents::random_actions, spec, r1).transcript().to_text();
      const std::string b = agents::run_episode(agents::random_actions, spec, r2).transcript().to_text();
      Episode replay(spec);
      for (const StepRecord& s : Transcript::parse(a).steps) replay.step(s.actions);
      const std::string c = replay.transcript().to_text();
      ++triples;
      if (a != b || a != c || Transcript::parse(a).to_text() != a) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(triples) + " triples, " + std::to_string(mismatches) +
                               " mismatches"};
}

Verdict oracle_rates(const std::vector<std::pair<EnvKind, int>>& cells, int episodes,
                     double threshold) {
  bool pass = true;
  std::string detail;
  for (const auto& [env, stage] : cells) {
    const agents::EvalReport r =
        agents::evaluate(agents::oracle, spec_of(env, stage), episodes, 0xACCE97);
    pass = pass && r.win_rate >= threshold;
    if (!detail.empty()) detail += ", ";
    detail += std::string(to_string(env)) + " S" + std::to_string(stage) + " " + fixed(r.win_rate, 3);
  }
  return {pass, detail + " (>= " + fixed(threshold, 2) + ", " + std::to_string(episodes) + " each)"};
}

// 4. Idle RTFM returns are compared against -0.02*T with ==; MESSENGER S3
// pickups are observed in oracle play and each pickup step must pay exactly 0.2.
Verdict reward_arithmetic() {
  int idle_ok = 0, idle_total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Episode ep(spec_of(EnvKind::rtfm, 1, seed));
    const std::vector<Action> stay(static_cast<std::size_t>(ep.n_agents()), Action::stay);
    int t = 0;
    bool ok = true;
    while (!ep.done()) {
      ep.step(stay);
      ++t;
      for (int a = 0; a < ep.n_agents(); ++a) ok = ok && ep.episode_return(a) == -0.02 * t;
    }
    ++idle_total;
    idle_ok += ok ? 1 : 0;
  }
  int pickups = 0, exact = 0, final_step = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Episode ep(spec_of(EnvKind::messenger, 3, seed));
    Rng rng(seed);
    while (!ep.done()) {
      const StepOutcome out = ep.step(agents::oracle(ep, rng));
      for (const Event& e : out.events) {
        if (e.kind != "message") continue;
        // A pickup on the last step shares its reward with the outcome; skip it.
        if (out.done) {
          ++final_step;
          continue;
        }
        ++pickups;
        if (out.rewards.at(static_cast<std::size_t>(e.agent)) == 0.2) ++exact;
      }
    }
  }
  const bool pass = idle_ok == idle_total && pickups > 0 && exact == pickups;
  return {pass, "idle " + std::to_string(idle_ok) + "/" + std::to_string(idle_total) +
                    " exact, S3 pickups " + std::to_string(exact) + "/" + std::to_string(pickups) +
                    " exact (" + std::to_string(final_step) + " on a final step skipped)"};
}

// 5. Monster two columns right of the agent on the same row: only the column
// distance can decrease, so P(left) = chase + (1 - chase) / 4.
Verdict chase_mixture() {
  constexpr int kDraws = 100000;
  const double chase = rtfm::Config{}.chase_prob;
  const double analytic = chase + (1.0 - chase) / 4.0;
  Rng rng = Rng::split(0xC4A5E, "monster-move");
  const std::vector<GridPos> agent{{4, 0}};
  int left = 0;
  for (int i = 0; i < kDraws; ++i) {
    left += rtfm::monster_direction({4, 4}, agent, chase, rng) == Action::left ? 1 : 0;
  }
  const double freq = static_cast<double>(left) / kDraws;
  return {std::abs(freq - analytic) <= 0.01,
          "analytic " + fixed(analytic) + ", empirical " + fixed(freq) + " over 1e5"};
}

bool contains(const std::vector<std::string>& words, const std::string& w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

bool contains_id(const std::vector<int>& ids, int id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

// 6. Set-level checks over the split tables, then every generated episode's
// stated facts must fall inside its own split.
Verdict split_disjointness() {
  const text::Resources& res = text::Resources::builtin();
  const text::SplitSpec& s = res.splits;
  std::size_t overlap = 0, quads = 0;
  for (const auto& mt : s.rtfm_train.monster_team) {
    for (const auto& me : s.rtfm_train.modifier_element) {
      ++quads;
      if (s.rtfm_eval.monster_team.count(mt) && s.rtfm_eval.modifier_element.count(me)) ++overlap;
    }
  }
  for (const auto& p : s.rtfm_eval.monster_team) overlap += s.rtfm_train.monster_team.count(p);
  for (const auto& p : s.rtfm_eval.modifier_element) overlap += s.rtfm_train.modifier_element.count(p);

  const text::RtfmVocabulary& fresh = text::rtfm_new_vocabulary();
  std::size_t old_words = 0;
  for (const auto& [m, t] : s.rtfm_eval_new.monster_team) old_words += contains(fresh.monsters, m) ? 0 : 1;
  for (const auto& [m, e] : s.rtfm_eval_new.modifier_element) {
    old_words += contains(fresh.modifiers, m) ? 0 : 1;
  }
  for (const auto& w : s.rtfm_eval_new.weapons) old_words += contains(fresh.weapons, w) ? 0 : 1;

  std::size_t seen = 0;
  for (const auto& p : s.messenger_eval.entity_role) seen += s.messenger_train.entity_role.count(p);
  for (int id : s.messenger_eval.template_ids) {
    seen += static_cast<std::size_t>(std::count(s.messenger_train.template_ids.begin(),
                                                s.messenger_train.template_ids.end(), id));
  }

  // Generated episodes.
  std::size_t stray = 0, episodes = 0;
  for (Split split : {Split::train, Split::eval, Split::eval_new}) {
    const text::RtfmSplitSets& sets = s.rtfm(split);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Episode ep(spec_of(EnvKind::rtfm, 1 + static_cast<int>(seed % 5), seed, split));
      const rtfm::Assignment& a = ep.rtfm_state().assignment;
      for (const auto& p : a.monster_team) stray += sets.monster_team.count(p) ? 0 : 1;
      for (const auto& p : a.modifier_element) stray += sets.modifier_element.count(p) ? 0 : 1;
      if (split == Split::eval_new) {
        for (const Entity& e : ep.rtfm_state().entities) {
          const RtfmTags& t = e.rtfm();
          const bool fresh_word = t.kind == RtfmKind::monster
                                      ? contains(fresh.monsters, t.word)
                                      : contains(fresh.weapons, t.word) && contains(fresh.modifiers, t.modifier);
          stray += fresh_word ? 0 : 1;
        }
      }
      ++episodes;
    }
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Episode ep(spec_of(EnvKind::messenger, 1 + static_cast<int>(seed % 3), seed, Split::eval));
    for (const auto& pe : ep.messenger_state().assignment.entities) {
      stray += s.messenger_eval.entity_role.count({pe.name, pe.role}) ? 0 : 1;
    }
    for (const auto& src : ep.manual().provenance) {
      if (src.kind != text::TemplateKind::messenger) continue;
      stray += contains_id(s.messenger_eval.template_ids, src.template_id) ? 0 : 1;
    }
    ++episodes;
  }
  const bool pass = overlap == 0 && old_words == 0 && seen == 0 && stray == 0;
  return {pass, "rtfm overlap " + std::to_string(overlap) + " over " + std::to_string(quads) +
                    " train quadruples, eval_new old words " + std::to_string(old_words) +
                    ", messenger seen " + std::to_string(seen) + ", stray facts " +
                    std::to_string(stray) + " in " + std::to_string(episodes) + " episodes"};
}

Verdict corpus_counts() {
  const text::CorpusCounts c = text::TemplateCorpus::builtin().counts();
  bool verified = true;
  try {
    text::TemplateCorpus::builtin().verify();
  } catch (const FormatError&) {
    verified = false;
  }
  std::ostringstream os;
  os << "rtfm " << c.goal_templates << "+" << c.team_templates << "+" << c.modifier_templates
     << ", messenger " << c.messenger_templates << " x " << c.fillings_per_template << " = "
     << c.messenger_descriptions;
  return {c == text::kExpectedCounts && verified, os.str()};
}

Verdict gradients() {
  Rng rng(0x96AD);
  double worst = 0.0;
  std::string detail;
  const std::vector<std::pair<std::string, std::function<division::GradCheck(Rng&)>>> suite{
      {"opponent_nll", [](Rng& r) { return division::check_opponent_nll(r, 100); }},
      {"kl_to_target", [](Rng& r) { return division::check_kl_to_target(r, 100); }},
      {"reg_num", [](Rng& r) { return division::check_reg_num(r, 100); }},
      {"reg_dis", [](Rng& r) { return division::check_reg_dis(r, 100); }},
      {"loss", [](Rng& r) { return division::check_endi_loss(r, 100); }},
  };
  for (const auto& [name, run] : suite) {
    Rng child = rng.child(name);
    const division::GradCheck g = run(child);
    worst = std::max(worst, g.max_relative_error);
    if (!detail.empty()) detail += ", ";
    std::ostringstream os;
    os << name << " " << g.max_relative_error;
    detail += os.str();
  }
  return {worst < 1e-6, "max rel err " + detail};
}

Verdict gumbel() {
  constexpr int kDraws = 100000;
  Rng rng(0x6B);
  double worst = 0.0;
  for (double tau : {0.1, 1.0}) {
    for (double l : {-2.0, 0.0, 2.0}) {
      const ad::Tensor logits = ad::Tensor::matrix(1, 2, {0.0, l});
      int ones = 0;
      for (int i = 0; i < kDraws; ++i) ones += division::gumbel_mask(logits, tau, rng).mask[0];
      const double err = std::abs(static_cast<double>(ones) / kDraws - 1.0 / (1.0 + std::exp(-l)));
      worst = std::max(worst, err);
    }
  }
  return {worst <= 0.01, "max |freq - sigmoid| " + fixed(worst) + " over 6 settings x 1e5"};
}

int entity_count(const division::View& v) {
  int n = 0;
  for (const auto& cell : v.cells) {
    for (const division::CellItem& i : cell) n += i.entity >= 0 ? 1 : 0;
  }
  return n;
}

// 10. Masks come from the sampler; the perturbation renames and moves one
// masked-out entity and compares self logits with ==.
Verdict mask_partition() {
  const division::Vocabulary& vocab = division::Vocabulary::builtin();
  Rng rng(0x3A5C);
  int masks = 0, bad = 0, perturbations = 0, leaks = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const EnvKind env = seed % 2 == 0 ? EnvKind::rtfm : EnvKind::messenger;
    const int n = env == EnvKind::rtfm && seed % 3 == 0 ? 3 : 2;
    EpisodeSpec spec = spec_of(env, 1 + static_cast<int>(seed % max_stage(env)), seed);
    spec.n_agents = n;
    const Episode ep(spec);
    const division::View v = division::make_view(ep, 0);
    Rng prng = rng.child("params", seed);
    const division::Params p = division::Params::random(vocab.size(), 8, n, prng);
    Rng srng = rng.child("step", seed);
    const division::StepOutput out = division::endi_step(v, p, vocab, srng);
    const std::vector<int>& m = out.subgoal.mask;
    ++masks;
    const auto [self, others] = division::mask_apply(v, m);
    bool ok = entity_count(self) + entity_count(others) == entity_count(v);
    for (std::size_t e = 0; e < m.size(); ++e) {
      ok = ok && (m[e] == 0 || m[e] == 1) && m[e] + out.subgoal.complement[e] == 1;
    }
    bad += ok ? 0 : 1;

    for (std::size_t e = 0; e < m.size(); ++e) {
      if (m[e] != 0) continue;
      division::View w = v;
      for (auto& cell : w.cells) {
        std::erase_if(cell, [&](const division::CellItem& i) { return i.entity == static_cast<int>(e); });
      }
      const GridPos moved{static_cast<int>((seed + e) % static_cast<std::size_t>(v.height)), 0};
      w.entities[e] = moved;
      w.place(moved, division::CellItem{static_cast<int>(e), {env == EnvKind::rtfm ? "wolf" : "#7"}});
      division::StepOptions forced;
      forced.forced_mask = m;
      Rng r1(seed), r2(seed);
      ++perturbations;
      if (division::endi_step(v, p, vocab, r1, forced).self_logits !=
          division::endi_step(w, p, vocab, r2, forced).self_logits) {
        ++leaks;
      }
    }
  }
  return {bad == 0 && leaks == 0 && perturbations > 0,
          std::to_string(masks) + " masks, " + std::to_string(bad) + " not partitions, " +
              std::to_string(perturbations) + " perturbations, " + std::to_string(leaks) + " changed"};
}

// 11. The operation examples, compared with ==.
Verdict regularizer_forms() {
  int wrong = 0;
  auto expect = [&](double got, double want) { wrong += got == want ? 0 : 1; };
  expect(division::reg_num(3, 3, 2), 0.0);
  expect(division::reg_num(4, 2, 2), 2.0);
  expect(division::reg_num(2, 4, 3), 0.0);
  expect(division::reg_num_relaxed({1.0, 1.0, 1.0, 1.0, 0.0, 0.0}, 2).value, 2.0);
  const std::vector<GridPos> entities{{1, 2}, {3, 4}};
  expect(division::reg_dis({1.0, 0.0}, entities, {0, 0}, {{3, 3}}), 4.0);
  expect(division::reg_dis({1.0, 0.0}, entities, {1, 2}, {{3, 4}}), 0.0);
  expect(division::reg_dis({1.0, 0.0}, {{1, 3}, {3, 4}}, {0, 0}, {{3, 3}}), 5.0);
  expect(division::reg_dis_relaxed({1.0, 0.0}, entities, {0, 0}, {{3, 3}}).value, 4.0);
  for (int n = 2; n <= 5; ++n) {
    for (int k = 1; k <= 6; ++k) {
      const std::vector<double> rho(static_cast<std::size_t>(k), 1.0 / n);
      const division::ScalarGrad kl = division::kl_to_target(rho, n);
      expect(kl.value, 0.0);
      for (double g : kl.grad) expect(g, 0.0);
    }
  }
  return {wrong == 0, std::to_string(wrong) + " mismatches over 8 examples and 24 uniform KL points"};
}

}  // namespace

std::string CheckResult::line() const {
  std::ostringstream os;
  os << (pass ? "PASS " : "FAIL ") << (id < 10 ? " " : "") << id << " ";
  os << name << std::string(name.size() < 20 ? 20 - name.size() : 1, ' ');
  os << detail << " [" << fixed(seconds, 2) << " s]";
  return os.str();
}

std::string check_name(int id) {
  static const char* names[] = {"determinism",  "oracle_s1",      "solvability", "reward_arithmetic",
                                "chase_mixture", "split_disjoint", "corpus_counts", "gradients",
                                "gumbel_hard",  "mask_partition", "regularizers"};
  if (id < 1 || id > kNumChecks) throw PreconditionError("check id must be 1.." + std::to_string(kNumChecks));
  return names[id - 1];
}

CheckResult run_check(int id) {
  CheckResult r;
  r.id = id;
  r.name = check_name(id);
  const auto start = Clock::now();
  Verdict v;
  double budget = 0.0;  // seconds; 0 means no runtime bound
  try {
    switch (id) {
      case 1: v = determinism(); budget = 60; break;
      case 2:
        v = oracle_rates({{EnvKind::rtfm, 1}, {EnvKind::messenger, 1}}, 1000, 0.99);
        budget = 120;
        break;
      case 3:
        v = oracle_rates({{EnvKind::rtfm, 2}, {EnvKind::rtfm, 3}, {EnvKind::rtfm, 4}, {EnvKind::rtfm, 5},
                          {EnvKind::messenger, 2}},
                         500, 0.95);
        break;
      case 4: v = reward_arithmetic(); break;
      case 5: v = chase_mixture(); break;
      case 6: v = split_disjointness(); break;
      case 7: v = corpus_counts(); break;
      case 8: v = gradients(); budget = 60; break;
      case 9: v = gumbel(); break;
      case 10: v = mask_partition(); break;
      case 11: v = regularizer_forms(); break;
    }
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.pass = v.pass;
  r.detail = v.detail;
  if (budget > 0 && r.seconds >= budget) {
    r.pass = false;
    r.detail += ", over the " + fixed(budget, 0) + " s budget";
  }
  return r;
}

std::vector<CheckResult> run_all() {
  std::vector<CheckResult> out;
  for (int id = 1; id <= kNumChecks; ++id) out.push_back(run_check(id));
  return out;
}

}  // namespace langgrid::checks
