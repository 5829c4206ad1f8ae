#include "langgrid/division.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "langgrid/error.hpp"
#include "langgrid/manual.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::division {

using ad::Tape;
using ad::Tensor;
using ad::Var;

// ---- view ----

std::vector<GridPos> View::other_agents() const {
  std::vector<GridPos> out;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (static_cast<int>(i) != agent) out.push_back(agents[i]);
  }
  return out;
}

void View::place(GridPos p, CellItem item) {
  if (p.row < 0 || p.row >= height || p.col < 0 || p.col >= width) {
    throw PreconditionError("view: item off-grid");
  }
  cells[static_cast<std::size_t>(p.row * width + p.col)].push_back(std::move(item));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '#') {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

std::string symbol_token(int symbol) { return "#" + std::to_string(symbol); }

}  // namespace

View make_view(const Episode& episode, int agent) {
  View v;
  v.height = v.width = episode.spec().grid;
  v.cells.resize(static_cast<std::size_t>(v.height * v.width));
  v.agent = agent;
  v.agents = episode.agent_positions();
  for (const std::string& s : episode.manual().sentences) v.manual.push_back(tokenize(s));
  v.goal = tokenize(episode.manual().goal);

  auto add_entities = [&](const std::vector<Entity>& entities, bool symbols) {
    for (const Entity& e : entities) {
      if (!e.alive) continue;
      const int k = static_cast<int>(v.entities.size());
      v.entities.push_back(e.pos);
      v.entity_uids.push_back(e.uid);
      v.place(e.pos, CellItem{k, symbols ? std::vector<std::string>{symbol_token(e.symbol)}
                                         : tokenize(e.name)});
    }
  };

  if (episode.is_rtfm()) {
    const rtfm::State& s = episode.rtfm_state();
    add_entities(s.entities, false);
    for (const AgentState& a : s.agents) {
      v.place(a.pos, CellItem{-1, {a.id == agent ? "you" : "ally"}});
    }
    const AgentState& self = s.agents.at(static_cast<std::size_t>(agent));
    if (self.inventory) v.place(self.pos, CellItem{-1, tokenize(s.entity(*self.inventory).name)});
  } else {
    const messenger::State& s = episode.messenger_state();
    add_entities(s.entities, true);
    for (const AgentState& a : s.agents) {
      int sym;
      if (a.id == agent) {
        sym = a.has_message ? text::kSymbolSelfWithMessage : text::kSymbolSelf;
      } else {
        sym = a.has_message ? text::kSymbolAllyWithMessage : text::kSymbolAlly;
      }
      v.place(a.pos, CellItem{-1, {symbol_token(sym)}});
    }
  }
  return v;
}

// ---- vocabulary ----

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
}

const Vocabulary& Vocabulary::builtin() {
  static const Vocabulary v = [] {
    std::vector<std::string> words{"you", "ally"};
    auto add = [&](std::string_view text) {
      for (auto& t : tokenize(text)) words.push_back(std::move(t));
    };
    auto strip_blanks = [](std::string s) {
      std::size_t open;
      while ((open = s.find('{')) != std::string::npos) {
        s.erase(open, s.find('}', open) - open + 1);
      }
      return s;
    };
    const text::TemplateCorpus& corpus = text::TemplateCorpus::builtin();
    for (auto kind : {text::TemplateKind::rtfm_goal, text::TemplateKind::rtfm_team,
                      text::TemplateKind::rtfm_modifier, text::TemplateKind::messenger}) {
      for (const auto& t : corpus.templates(kind)) add(strip_blanks(t.text));
      add(strip_blanks(std::string(text::canonical_pattern(kind))));
    }
    for (const auto* vocab : {&text::rtfm_base_vocabulary(), &text::rtfm_new_vocabulary()}) {
      for (const auto* list : {&vocab->monsters, &vocab->weapons, &vocab->modifiers,
                               &vocab->elements, &vocab->teams}) {
        for (const auto& w : *list) add(w);
      }
    }
    for (const auto& e : corpus.entities()) {
      add(e);
      for (const auto& s : corpus.entity_synonyms(e)) add(s);
    }
    for (Role r : {Role::enemy, Role::message, Role::goal}) {
      for (const auto& w : corpus.role_words(r)) add(w);
      for (const auto& w : corpus.adjectives(r)) add(w);
    }
    for (Movement m : {Movement::stationary, Movement::random, Movement::chasing,
                       Movement::fleeing}) {
      add(to_string(m));
    }
    for (int stage = 1; stage <= 3; ++stage) {
      add(text::messenger_task(Stage{stage}, false));
      add(text::messenger_task(Stage{stage}, true));
    }
    for (int sym = 0; sym <= text::kSymbolAllyWithMessage; ++sym) words.push_back(symbol_token(sym));
    return Vocabulary(std::move(words));
  }();
  return v;
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw PreconditionError("vocabulary: unknown token '" + std::string(token) + "'");
  return it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

// ---- parameters ----

namespace {

GroundParams ground_zeros(int vocab, int d) {
  return {Tensor({vocab, d}), Tensor({d, d}), Tensor({d, d}), Tensor({d, d})};
}

}  // namespace

Params Params::zeros(int vocab, int d, int n_agents) {
  if (vocab <= 0 || d <= 0) throw PreconditionError("params: vocab and d must be positive");
  if (n_agents < 2) throw PreconditionError("params: need at least two agents");
  Params p;
  p.d = d;
  p.goal = ground_zeros(vocab, d);
  p.policy = ground_zeros(vocab, d);
  p.mixture_w = Tensor({2 * (d + 1), 2});
  p.mixture_b = Tensor({1, 2});
  p.self_w = Tensor({d, kNumActions});
  p.self_b = Tensor({1, kNumActions});
  for (int i = 0; i + 1 < n_agents; ++i) {
    p.other_w.emplace_back(std::vector<int>{d, kNumActions});
    p.other_b.emplace_back(std::vector<int>{1, kNumActions});
  }
  return p;
}

Params Params::random(int vocab, int d, int n_agents, Rng& rng, double scale) {
  Params p = zeros(vocab, d, n_agents);
  for (auto& [name, t] : p.named()) {
    for (double& v : t->data()) v = scale * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

std::vector<std::pair<std::string, const Tensor*>> Params::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const auto& [name, t] : const_cast<Params*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Params::named() {
  std::vector<std::pair<std::string, Tensor*>> out{
      {"goal.embed", &goal.embed},       {"goal.attend", &goal.attend},
      {"goal.mix", &goal.mix},           {"goal.gate", &goal.gate},
      {"policy.embed", &policy.embed},   {"policy.attend", &policy.attend},
      {"policy.mix", &policy.mix},       {"policy.gate", &policy.gate},
      {"mixture.w", &mixture_w},         {"mixture.b", &mixture_b},
      {"self.w", &self_w},               {"self.b", &self_b},
  };
  for (std::size_t i = 0; i < other_w.size(); ++i) {
    out.emplace_back("other" + std::to_string(i) + ".w", &other_w[i]);
    out.emplace_back("other" + std::to_string(i) + ".b", &other_b[i]);
  }
  return out;
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

// ---- grounding on a tape ----

namespace {

struct GroundVars {
  Var embed, attend, mix, gate;
};

GroundVars bind(Tape& t, const GroundParams& p, bool track) {
  auto mk = [&](const Tensor& x) { return track ? t.variable(x) : t.constant(x); };
  return {mk(p.embed), mk(p.attend), mk(p.mix), mk(p.gate)};
}

std::vector<int> ids_of(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<int> out;
  for (const auto& tok : tokens) out.push_back(vocab.index(tok));
  return out;
}

/// Mean embedding rows: out[j] = mean of embed rows listed in groups[j].
Var mean_rows(Tape& t, Var embed, const std::vector<std::vector<int>>& groups) {
  std::vector<int> used;
  for (const auto& g : groups) used.insert(used.end(), g.begin(), g.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  Tensor avg({static_cast<int>(groups.size()), static_cast<int>(used.size())});
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const double w = 1.0 / static_cast<double>(groups[j].size());
    for (int id : groups[j]) {
      const auto col = std::lower_bound(used.begin(), used.end(), id) - used.begin();
      avg.at(static_cast<int>(j), static_cast<int>(col)) += w;
    }
  }
  return t.matmul(t.constant(std::move(avg)), t.gather_rows(embed, used));
}

/// Cell features (h*w) x d. `weights` (K x 1) scales every entity's contribution;
/// agent and inventory items always count fully.
Var ground_on_tape(Tape& t, const GroundVars& g, const View& view, const Vocabulary& vocab,
                   std::optional<Var> weights) {
  const int hw = view.height * view.width;
  const int d = t.value(g.embed).cols();
  const int k = static_cast<int>(view.entities.size());

  // Distinct cell tokens in vocabulary order.
  std::set<int> token_set;
  for (const auto& cell : view.cells) {
    for (const auto& item : cell) {
      for (int id : ids_of(item.tokens, vocab)) token_set.insert(id);
    }
  }
  const std::vector<int> tokens(token_set.begin(), token_set.end());
  auto col_of = [&](int id) {
    return static_cast<int>(std::lower_bound(tokens.begin(), tokens.end(), id) - tokens.begin());
  };

  if (tokens.empty()) return t.constant(Tensor({hw, d}));

  Var token_feat = t.gather_rows(g.embed, tokens);

  // Manual features: sentences pooled as a bag (sorted first so order never matters).
  std::vector<std::vector<int>> sentences;
  for (const auto& s : view.manual) {
    if (!s.empty()) sentences.push_back(ids_of(s, vocab));
  }
  std::sort(sentences.begin(), sentences.end());
  if (!sentences.empty()) {
    Tensor member({static_cast<int>(tokens.size()), static_cast<int>(sentences.size())});
    bool any = false;
    for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
      int count = 0;
      for (const auto& s : sentences) count += std::count(s.begin(), s.end(), tokens[ti]) > 0;
      if (count == 0) continue;
      any = true;
      for (std::size_t j = 0; j < sentences.size(); ++j) {
        if (std::count(sentences[j].begin(), sentences[j].end(), tokens[ti]) > 0) {
          member.at(static_cast<int>(ti), static_cast<int>(j)) = 1.0 / count;
        }
      }
    }
    if (any) {
      Var sent = mean_rows(t, g.embed, sentences);
      Var manual_feat = t.matmul(t.constant(std::move(member)), sent);
      token_feat = t.add(token_feat, t.matmul(manual_feat, g.attend));
    }
  }

  // Cell pre-activations: agent/inventory items plus weighted entity rows.
  Tensor agent_counts({hw, static_cast<int>(tokens.size())});
  Tensor entity_counts({std::max(k, 1), static_cast<int>(tokens.size())});
  Tensor location({hw, std::max(k, 1)});
  for (int cell = 0; cell < hw; ++cell) {
    for (const auto& item : view.cells[static_cast<std::size_t>(cell)]) {
      for (int id : ids_of(item.tokens, vocab)) {
        if (item.entity < 0) {
          agent_counts.at(cell, col_of(id)) += 1.0;
        } else {
          entity_counts.at(item.entity, col_of(id)) += 1.0;
        }
      }
      if (item.entity >= 0) location.at(cell, item.entity) = 1.0;
    }
  }
  Var pre = t.matmul(t.constant(std::move(agent_counts)), token_feat);
  if (k > 0) {
    Var rows = t.matmul(t.constant(std::move(entity_counts)), token_feat);
    if (weights) rows = t.mul_rows(rows, *weights);
    pre = t.add(pre, t.matmul(t.constant(std::move(location)), rows));
  }

  Var out = t.matmul(pre, g.mix);
  if (!view.goal.empty()) {
    Var goal = mean_rows(t, g.embed, {ids_of(view.goal, vocab)});
    Var gate = t.matmul(t.constant(Tensor({hw, 1}, 1.0)), t.matmul(goal, g.gate));
    out = t.add(out, t.mul(pre, gate));
  }
  return t.tanh(out);
}

Tensor positional_channel(const View& view, const std::vector<GridPos>& from) {
  const IntMap m = joint_positional_feature(from, view.height, view.width);
  const double norm = std::max(1, view.height + view.width - 2);
  Tensor out({view.height * view.width, 1});
  for (std::size_t i = 0; i < m.values.size(); ++i) out[i] = m.values[i] / norm;
  return out;
}

std::vector<int> entity_cells(const std::vector<GridPos>& entities, int height, int width) {
  std::vector<int> out;
  for (const GridPos& p : entities) {
    if (p.row < 0 || p.row >= height || p.col < 0 || p.col >= width) {
      throw PreconditionError("subgoal_logits: entity off-grid");
    }
    out.push_back(p.row * width + p.col);
  }
  return out;
}

Var logits_on_tape(Tape& t, Var x_self, Var x_others, const std::vector<int>& cells, Var w,
                   Var b) {
  Var z = t.concat_cols(x_self, x_others);
  return t.add_row(t.matmul(t.gather_rows(z, cells), w), b);
}

}  // namespace

Tensor ground_toy(const View& view, const GroundParams& params, const Vocabulary& vocab) {
  Tape t;
  Var x = ground_on_tape(t, bind(t, params, false), view, vocab, std::nullopt);
  return t.value(x).reshaped({view.height, view.width, t.value(x).cols()});
}

Tensor subgoal_logits(const Tensor& x_self, const Tensor& x_others,
                      const std::vector<GridPos>& entities, const Tensor& mixture_w,
                      const Tensor& mixture_b) {
  if (x_self.shape() != x_others.shape() || x_self.rank() != 3) {
    throw PreconditionError("subgoal_logits: representations must share an (h, w, c) shape");
  }
  Tape t;
  const auto cells = entity_cells(entities, x_self.shape()[0], x_self.shape()[1]);
  Var out = logits_on_tape(t, t.constant(x_self.reshaped({x_self.rows(), x_self.cols()})),
                           t.constant(x_others.reshaped({x_others.rows(), x_others.cols()})),
                           cells, t.constant(mixture_w), t.constant(mixture_b));
  return t.value(out);
}

// ---- Gumbel mask ----

SubgoalState gumbel_mask(const Tensor& logits, double tau, Rng& rng) {
  Tensor noise({logits.rows(), 2});
  for (double& v : noise.data()) v = rng.gumbel();
  return gumbel_mask(logits, noise, tau);
}

SubgoalState gumbel_mask(const Tensor& logits, const Tensor& noise, double tau) {
  if (!(tau > 0.0)) throw PreconditionError("gumbel_mask: temperature must be positive");
  if (logits.cols() != 2 || noise.rows() != logits.rows() || noise.cols() != 2) {
    throw PreconditionError("gumbel_mask: expected K x 2 logits and noise");
  }
  SubgoalState s;
  s.logits = logits;
  s.noise = noise;
  s.tau = tau;
  s.relaxed = Tensor({logits.rows(), 2});
  for (int e = 0; e < logits.rows(); ++e) {
    const double y0 = (logits.at(e, 0) + noise.at(e, 0)) / tau;
    const double y1 = (logits.at(e, 1) + noise.at(e, 1)) / tau;
    const double mx = std::max(y0, y1);
    const double a = std::exp(y0 - mx), b = std::exp(y1 - mx);
    s.relaxed.at(e, 0) = a / (a + b);
    s.relaxed.at(e, 1) = b / (a + b);
    s.rho.push_back(1.0 / (1.0 + std::exp(logits.at(e, 0) - logits.at(e, 1))));
    const int m = logits.at(e, 1) + noise.at(e, 1) > logits.at(e, 0) + noise.at(e, 0) ? 1 : 0;
    s.mask.push_back(m);
    s.complement.push_back(1 - m);
  }
  return s;
}

std::pair<View, View> mask_apply(const View& view, const std::vector<int>& mask) {
  if (mask.size() != view.entities.size()) {
    throw PreconditionError("mask_apply: one mask entry per entity required");
  }
  View self = view, others = view;
  auto filter = [&](View& v, int keep) {
    for (auto& cell : v.cells) {
      std::erase_if(cell, [&](const CellItem& item) {
        return item.entity >= 0 && mask[static_cast<std::size_t>(item.entity)] != keep;
      });
    }
  };
  filter(self, 1);
  filter(others, 0);
  return {std::move(self), std::move(others)};
}

// ---- losses ----

ScalarGrad kl_to_target(const std::vector<double>& rho, int n_agents) {
  if (n_agents < 1) throw PreconditionError("kl_to_target: n_agents must be positive");
  if (n_agents == 1) throw PreconditionError("kl_to_target: target 1/n must lie in (0,1)");
  if (rho.empty()) return {0.0, {}};
  Tape t;
  Var r = t.variable(Tensor({static_cast<int>(rho.size()), 1}, rho));
  Var kl = t.bernoulli_kl(r, 1.0 / n_agents);
  t.backward(kl);
  return {t.value(kl).item(), t.grad(r).data()};
}

double reg_num(double count_self, double count_others, int n_agents) {
  if (n_agents < 2) throw PreconditionError("reg_num: needs at least two agents");
  return std::fabs(count_self - count_others / (n_agents - 1));
}

double reg_dis(const std::vector<double>& self_weight, const std::vector<GridPos>& entities,
               GridPos self, const std::vector<GridPos>& others) {
  if (others.empty()) throw PreconditionError("reg_dis: no other agents");
  if (self_weight.size() != entities.size()) {
    throw PreconditionError("reg_dis: one weight per entity required");
  }
  double acc = 0.0;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    int nearest = manhattan(entities[e], others.front());
    for (const GridPos& o : others) nearest = std::min(nearest, manhattan(entities[e], o));
    acc += self_weight[e] * manhattan(entities[e], self) + (1.0 - self_weight[e]) * nearest;
  }
  return acc;
}

namespace {

Var reg_num_on_tape(Tape& t, Var rho, int n) {
  if (n < 2) throw PreconditionError("reg_num: needs at least two agents");
  return t.abs(t.sub(t.sum(rho), t.scale(t.sum(t.one_minus(rho)), 1.0 / (n - 1))));
}

Var reg_dis_on_tape(Tape& t, Var rho, const std::vector<GridPos>& entities, GridPos self,
                    const std::vector<GridPos>& others) {
  if (others.empty()) throw PreconditionError("reg_dis: no other agents");
  const int k = static_cast<int>(entities.size());
  if (t.value(rho).size() != entities.size()) {
    throw PreconditionError("reg_dis: one weight per entity required");
  }
  Tensor d_self({k, 1}), d_other({k, 1});
  for (int e = 0; e < k; ++e) {
    const GridPos p = entities[static_cast<std::size_t>(e)];
    d_self.at(e, 0) = manhattan(p, self);
    int nearest = manhattan(p, others.front());
    for (const GridPos& o : others) nearest = std::min(nearest, manhattan(p, o));
    d_other.at(e, 0) = nearest;
  }
  return t.add(t.sum(t.mul(rho, t.constant(std::move(d_self)))),
               t.sum(t.mul(t.one_minus(rho), t.constant(std::move(d_other)))));
}

ScalarGrad run_scalar(const std::vector<double>& rho, const std::function<Var(Tape&, Var)>& fn) {
  Tape t;
  Var r = t.variable(Tensor({static_cast<int>(rho.size()), 1}, rho));
  Var out = fn(t, r);
  t.backward(out);
  return {t.value(out).item(), t.grad(r).data()};
}

}  // namespace

ScalarGrad reg_num_relaxed(const std::vector<double>& rho, int n_agents) {
  if (rho.empty()) return {reg_num(0, 0, n_agents), {}};
  return run_scalar(rho, [&](Tape& t, Var r) { return reg_num_on_tape(t, r, n_agents); });
}

ScalarGrad reg_dis_relaxed(const std::vector<double>& rho, const std::vector<GridPos>& entities,
                           GridPos self, const std::vector<GridPos>& others) {
  if (rho.empty()) return {reg_dis({}, entities, self, others), {}};
  return run_scalar(rho, [&](Tape& t, Var r) {
    return reg_dis_on_tape(t, r, entities, self, others);
  });
}

NllResult opponent_nll(const std::vector<std::array<double, 5>>& predicted,
                       const std::vector<Action>& actual) {
  if (predicted.size() != actual.size()) {
    throw PreconditionError("opponent_nll: one prediction per other agent required");
  }
  NllResult r;
  r.grad.assign(predicted.size(), std::array<double, 5>{});
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    const std::size_t a = static_cast<std::size_t>(actual[j]);
    double p = predicted[j][a];
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      r.floored = true;
    } else {
      r.grad[j][a] = -1.0 / p;
    }
    r.value -= std::log(p);
  }
  return r;
}

std::array<double, 5> policy_head(const Tensor& pooled, const Tensor& w, const Tensor& b) {
  Tape t;
  Var out = t.add(t.matmul(t.constant(pooled), t.constant(w)), t.constant(b));
  std::array<double, 5> r{};
  for (int a = 0; a < kNumActions; ++a) r[static_cast<std::size_t>(a)] = t.value(out).at(0, a);
  return r;
}

// ---- end-to-end ----

namespace {

struct Bound {
  GroundVars goal, policy;
  Var mixture_w, mixture_b, self_w, self_b;
  std::vector<Var> other_w, other_b;
};

Bound bind_all(Tape& t, const Params& p) {
  Bound b;
  b.goal = bind(t, p.goal, true);
  b.policy = bind(t, p.policy, true);
  b.mixture_w = t.variable(p.mixture_w);
  b.mixture_b = t.variable(p.mixture_b);
  b.self_w = t.variable(p.self_w);
  b.self_b = t.variable(p.self_b);
  for (std::size_t i = 0; i < p.other_w.size(); ++i) {
    b.other_w.push_back(t.variable(p.other_w[i]));
    b.other_b.push_back(t.variable(p.other_b[i]));
  }
  return b;
}

/// K x 2 subgoal logits from the two goal representations.
Var goal_logits(Tape& t, const Bound& b, const View& view, const Vocabulary& vocab) {
  Var x_goal = ground_on_tape(t, b.goal, view, vocab, std::nullopt);
  const std::vector<GridPos> self_pos{view.agents.at(static_cast<std::size_t>(view.agent))};
  Var x_self = t.concat_cols(x_goal, t.constant(positional_channel(view, self_pos)));
  Var x_others = t.concat_cols(x_goal, t.constant(positional_channel(view, view.other_agents())));
  const auto cells = entity_cells(view.entities, view.height, view.width);
  return logits_on_tape(t, x_self, x_others, cells, b.mixture_w, b.mixture_b);
}

Params collect_grads(const Tape& t, const Bound& b, const Params& like) {
  Params g = Params::zeros(like.goal.embed.rows(), like.d, like.n_agents());
  const auto grads = g.named();
  std::vector<Var> vars{b.goal.embed,   b.goal.attend,   b.goal.mix,   b.goal.gate,
                        b.policy.embed, b.policy.attend, b.policy.mix, b.policy.gate,
                        b.mixture_w,    b.mixture_b,     b.self_w,     b.self_b};
  for (std::size_t j = 0; j < b.other_w.size(); ++j) {
    vars.push_back(b.other_w[j]);
    vars.push_back(b.other_b[j]);
  }
  for (std::size_t i = 0; i < vars.size(); ++i) *grads[i].second = t.grad(vars[i]);
  return g;
}

struct Forward {
  Var logits;      // K x 2
  Var rho;         // K x 1
  Var mask;        // K x 1, forward value per mode
  Var self_logits;  // 1 x 5
  std::vector<Var> other_probs;  // 1 x 5 each
  StepOutput out;
  bool has_entities = false;
};

Forward forward(Tape& t, const Bound& b, const View& view, const Params& params,
                const Vocabulary& vocab, Rng& rng, const StepOptions& opt) {
  if (static_cast<int>(view.agents.size()) != params.n_agents()) {
    throw PreconditionError("endi_step: parameters built for " + std::to_string(params.n_agents()) +
                            " agents, view has " + std::to_string(view.agents.size()));
  }
  Forward f;
  const int k = static_cast<int>(view.entities.size());
  f.has_entities = k > 0;

  f.out.goal_shape = {view.height, view.width, params.d + 1};
  Var one_col = t.constant(Tensor({std::max(k, 1), 1}, 1.0));
  Var mask = one_col;
  Var complement = one_col;
  if (k > 0) {
    f.logits = goal_logits(t, b, view, vocab);
    Var probs = t.softmax_rows(f.logits);
    f.rho = t.column(probs, 1);

    Tensor noise = opt.noise ? *opt.noise : Tensor({k, 2});
    if (!opt.noise && !opt.forced_mask) {
      for (double& v : noise.data()) v = rng.gumbel();
    }
    f.out.subgoal = gumbel_mask(t.value(f.logits), noise, opt.tau);
    if (opt.forced_mask) {
      if (opt.forced_mask->size() != static_cast<std::size_t>(k)) {
        throw PreconditionError("endi_step: forced mask size mismatch");
      }
      f.out.subgoal.mask = *opt.forced_mask;
      for (std::size_t e = 0; e < f.out.subgoal.mask.size(); ++e) {
        f.out.subgoal.complement[e] = 1 - f.out.subgoal.mask[e];
      }
    }
    Var perturbed = t.scale(t.add(f.logits, t.constant(noise)), 1.0 / opt.tau);
    Var soft = t.column(t.softmax_rows(perturbed), 1);
    if (opt.mode == MaskMode::relaxed && !opt.forced_mask) {
      mask = soft;
    } else {
      Tensor hard({k, 1});
      for (int e = 0; e < k; ++e) hard.at(e, 0) = f.out.subgoal.mask[static_cast<std::size_t>(e)];
      mask = opt.forced_mask ? t.constant(hard) : t.straight_through(soft, hard);
    }
    complement = t.one_minus(mask);
  }
  f.mask = mask;

  Var p_self = ground_on_tape(t, b.policy, view, vocab, k > 0 ? std::optional<Var>(mask) : std::nullopt);
  Var p_others =
      ground_on_tape(t, b.policy, view, vocab, k > 0 ? std::optional<Var>(complement) : std::nullopt);
  f.out.policy_shape = {view.height, view.width, t.value(p_self).cols()};

  Var pooled_self = t.max_rows(p_self);
  f.out.pooled_self = t.value(pooled_self);
  f.self_logits = t.add(t.matmul(pooled_self, b.self_w), b.self_b);
  Var pooled_others = t.max_rows(p_others);
  for (std::size_t j = 0; j < b.other_w.size(); ++j) {
    Var logits = t.add(t.matmul(pooled_others, b.other_w[j]), b.other_b[j]);
    f.other_probs.push_back(t.softmax_rows(logits));
  }
  for (int a = 0; a < kNumActions; ++a) {
    f.out.self_logits[static_cast<std::size_t>(a)] = t.value(f.self_logits).at(0, a);
  }
  for (Var p : f.other_probs) {
    std::array<double, 5> d{};
    for (int a = 0; a < kNumActions; ++a) d[static_cast<std::size_t>(a)] = t.value(p).at(0, a);
    f.out.others.push_back(d);
  }
  return f;
}

}  // namespace

LogitGradient subgoal_logit_gradient(const View& view, const Params& params,
                                     const Vocabulary& vocab, int entity, int side) {
  if (entity < 0 || entity >= static_cast<int>(view.entities.size()) || side < 0 || side > 1) {
    throw PreconditionError("subgoal_logit_gradient: no such logit");
  }
  Tape t;
  const Bound b = bind_all(t, params);
  Var logits = goal_logits(t, b, view, vocab);
  Var one = t.gather_rows(t.reshape(logits, {static_cast<int>(view.entities.size()) * 2, 1}),
                          std::vector<int>{entity * 2 + side});
  t.backward(one);
  return {t.value(one).item(), collect_grads(t, b, params)};
}

StepOutput endi_step(const View& view, const Params& params, const Vocabulary& vocab, Rng& rng,
                     const StepOptions& options) {
  Tape t;
  const Bound b = bind_all(t, params);
  return forward(t, b, view, params, vocab, rng, options).out;
}

LossReport endi_loss(const View& view, const Params& params, const Vocabulary& vocab,
                     const LossInputs& inputs, const LossWeights& weights, Rng& rng,
                     const StepOptions& options) {
  const int n = params.n_agents();
  if (static_cast<int>(inputs.others_actions.size()) != n - 1) {
    throw PreconditionError("endi_loss: one observed action per other agent required");
  }
  Tape t;
  const Bound b = bind_all(t, params);
  Forward f = forward(t, b, view, params, vocab, rng, options);
  LossReport r;
  r.regularizer = weights.regularizer;

  // Policy-gradient surrogate: -A * log pi_self(a).
  Var logp = t.log_softmax_rows(f.self_logits);
  const int a = static_cast<int>(inputs.self_action);
  Var pg = t.scale(t.gather_rows(t.reshape(logp, {kNumActions, 1}), std::vector<int>{a}),
                   -inputs.advantage);
  Var total = t.scale(pg, weights.policy);

  // Opponent modelling: summed NLL of the observed actions.
  Var nll = t.constant(Tensor({1, 1}, 0.0));
  for (std::size_t j = 0; j < f.other_probs.size(); ++j) {
    bool floored = false;
    Var logs = t.log_floor(f.other_probs[j], kProbabilityFloor, &floored);
    r.nll_floored |= floored;
    const int act = static_cast<int>(inputs.others_actions[j]);
    nll = t.sub(nll, t.gather_rows(t.reshape(logs, {kNumActions, 1}), std::vector<int>{act}));
  }
  total = t.add(total, t.scale(nll, weights.opponent));

  const int k = static_cast<int>(view.entities.size());
  if (k > 0) {
    Var kl = t.bernoulli_kl(f.rho, 1.0 / n);
    r.kl = t.value(kl).item();
    total = t.add(total, t.reshape(t.scale(kl, weights.kl), {1, 1}));

    const auto& hard = f.out.subgoal.mask;
    if (weights.regularizer == Regularizer::num) {
      Var reg = reg_num_on_tape(t, f.rho, n);
      r.reg_relaxed = t.value(reg).item();
      const double hs = static_cast<double>(std::count(hard.begin(), hard.end(), 1));
      r.reg_hard = reg_num(hs, k - hs, n);
      total = t.add(total, t.reshape(t.scale(reg, weights.reg), {1, 1}));
    } else if (weights.regularizer == Regularizer::dis) {
      const GridPos self = view.agents.at(static_cast<std::size_t>(view.agent));
      const auto others = view.other_agents();
      Var reg = reg_dis_on_tape(t, f.rho, view.entities, self, others);
      r.reg_relaxed = t.value(reg).item();
      r.reg_hard = reg_dis(std::vector<double>(hard.begin(), hard.end()), view.entities, self, others);
      total = t.add(total, t.reshape(t.scale(reg, weights.reg), {1, 1}));
    }
  }

  t.backward(total);
  r.policy = t.value(pg).item();
  r.opponent_nll = t.value(nll).item();
  r.total = t.value(total).item();
  r.grad = collect_grads(t, b, params);
  r.step = std::move(f.out);
  return r;
}

std::string LossReport::to_text() const {
  std::ostringstream os;
  os << "policy=" << format_double(policy) << '\n'
     << "opponent_nll=" << format_double(opponent_nll) << '\n'
     << "nll_floored=" << (nll_floored ? 1 : 0) << '\n'
     << "kl=" << format_double(kl) << '\n'
     << "regularizer=" << (regularizer == Regularizer::num   ? "num"
                           : regularizer == Regularizer::dis ? "dis"
                                                             : "none")
     << '\n'
     << "reg_relaxed=" << format_double(reg_relaxed) << '\n'
     << "reg_hard=" << format_double(reg_hard) << '\n'
     << "total=" << format_double(total) << '\n';
  for (const auto& [name, g] : grad.named()) {
    double sq = 0.0;
    for (double v : g->data()) sq += v * v;
    os << "grad_norm." << name << '=' << format_double(std::sqrt(sq)) << '\n';
  }
  return os.str();
}

// ---- checkpoints ----

namespace {

constexpr char kMagic[4] = {'L', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint: truncated");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Params& params) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.d));
  const auto named = params.named();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->rank()));
    for (int dim : t->shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(dim));
    for (double v : t->data()) put<double>(out, v);
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

Params load_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw FormatError("checkpoint: unsupported version");
  const int d = static_cast<int>(get<std::uint32_t>(in));
  const std::uint32_t count = get<std::uint32_t>(in);
  if (count < 12 || (count - 12) % 2 != 0) throw FormatError("checkpoint: bad tensor count");
  std::map<std::string, Tensor> tensors;
  std::vector<std::string> order;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get<std::uint32_t>(in);
    if (len > 256) throw FormatError("checkpoint: name too long");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const std::uint32_t rank = get<std::uint32_t>(in);
    if (rank < 1 || rank > 3) throw FormatError("checkpoint: bad rank for " + name);
    std::vector<int> shape;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint64_t dim = get<std::uint64_t>(in);
      if (dim > (1u << 24)) throw FormatError("checkpoint: dimension too large in " + name);
      shape.push_back(static_cast<int>(dim));
    }
    Tensor t(shape);
    for (double& v : t.data()) v = get<double>(in);
    order.push_back(name);
    tensors.emplace(name, std::move(t));
  }
  const auto it = tensors.find("goal.embed");
  if (it == tensors.end()) throw FormatError("checkpoint: missing goal.embed");
  Params p = Params::zeros(it->second.rows(), d, static_cast<int>((count - 12) / 2) + 1);
  for (auto& [name, t] : p.named()) {
    auto found = tensors.find(name);
    if (found == tensors.end()) throw FormatError("checkpoint: missing " + name);
    if (found->second.shape() != t->shape()) {
      throw FormatError("checkpoint: shape mismatch for " + name + ": " +
                        ad::shape_string(found->second.shape()) + " vs " +
                        ad::shape_string(t->shape()));
    }
    *t = std::move(found->second);
  }
  return p;
}

}  // namespace langgrid::division
