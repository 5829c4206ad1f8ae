#include "langgrid/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "langgrid/division.hpp"
#include "langgrid/game.hpp"

namespace langgrid::division {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), kRelativeErrorFloor});
  return std::fabs(analytic - numeric) / denom;
}

namespace {

constexpr double h = kFiniteDifferenceStep;

double central(const std::function<double(double)>& f, double x) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

void record(GradCheck& g, double analytic, double numeric) {
  g.max_relative_error = std::max(g.max_relative_error, relative_error(analytic, numeric));
  ++g.coordinates;
}

std::vector<double> random_rho(Rng& rng, int k) {
  std::vector<double> rho(static_cast<std::size_t>(k));
  for (double& r : rho) r = 0.02 + 0.96 * rng.uniform();
  return rho;
}

GridPos random_pos(Rng& rng, int n) {
  return {static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
          static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))};
}

void check_rho_fn(GradCheck& g, const std::vector<double>& rho,
                  const std::function<ScalarGrad(const std::vector<double>&)>& fn) {
  const ScalarGrad at = fn(rho);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double numeric = central(
        [&](double x) {
          std::vector<double> r = rho;
          r[i] = x;
          return fn(r).value;
        },
        rho[i]);
    record(g, at.grad[i], numeric);
  }
}

EpisodeSpec random_spec(Rng& rng, int draw) {
  EpisodeSpec spec;
  spec.env = draw % 2 == 0 ? EnvKind::rtfm : EnvKind::messenger;
  spec.stage = Stage{spec.env == EnvKind::rtfm ? 1 + static_cast<int>(rng.below(5))
                                               : 1 + static_cast<int>(rng.below(2))};
  spec.n_agents = spec.env == EnvKind::rtfm && draw % 4 == 0 ? 3 : 2;
  spec.seed = rng.next_u64();
  return spec;
}

}  // namespace

GradCheck check_opponent_nll(Rng& rng, int draws) {
  GradCheck g;
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const int others = 1 + static_cast<int>(rng.below(3));
    std::vector<std::array<double, 5>> pred(static_cast<std::size_t>(others));
    std::vector<Action> actual;
    for (auto& p : pred) {
      double total = 0.0;
      for (double& v : p) total += v = 0.05 + rng.uniform();
      for (double& v : p) v /= total;
      actual.push_back(static_cast<Action>(rng.below(5)));
    }
    const NllResult at = opponent_nll(pred, actual);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      for (std::size_t a = 0; a < 5; ++a) {
        const double numeric = central(
            [&](double x) {
              auto p = pred;
              p[j][a] = x;
              return opponent_nll(p, actual).value;
            },
            pred[j][a]);
        record(g, at.grad[j][a], numeric);
      }
    }
  }
  return g;
}

GradCheck check_kl_to_target(Rng& rng, int draws) {
  GradCheck g;
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const int n = 2 + static_cast<int>(rng.below(3));
    check_rho_fn(g, random_rho(rng, 1 + static_cast<int>(rng.below(8))),
                 [&](const std::vector<double>& r) { return kl_to_target(r, n); });
  }
  return g;
}

GradCheck check_reg_num(Rng& rng, int draws) {
  GradCheck g;
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const int n = 2 + static_cast<int>(rng.below(3));
    check_rho_fn(g, random_rho(rng, 1 + static_cast<int>(rng.below(8))),
                 [&](const std::vector<double>& r) { return reg_num_relaxed(r, n); });
  }
  return g;
}

GradCheck check_reg_dis(Rng& rng, int draws) {
  GradCheck g;
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const int k = 1 + static_cast<int>(rng.below(8));
    std::vector<GridPos> entities;
    for (int e = 0; e < k; ++e) entities.push_back(random_pos(rng, 10));
    const GridPos self = random_pos(rng, 10);
    std::vector<GridPos> others;
    for (int o = 0, n = 1 + static_cast<int>(rng.below(3)); o < n; ++o) {
      others.push_back(random_pos(rng, 10));
    }
    check_rho_fn(g, random_rho(rng, k), [&](const std::vector<double>& r) {
      return reg_dis_relaxed(r, entities, self, others);
    });
  }
  return g;
}

namespace {

/// Picks coordinates, favouring those with a nonzero analytic gradient.
std::vector<std::pair<std::size_t, std::size_t>> pick_coordinates(const Params& grad, Rng& rng,
                                                                  int count) {
  std::vector<std::pair<std::size_t, std::size_t>> nonzero, zero;
  const auto named = grad.named();
  for (std::size_t p = 0; p < named.size(); ++p) {
    const auto& data = named[p].second->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      (data[i] != 0.0 ? nonzero : zero).emplace_back(p, i);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const int from_zero = std::min<int>(count / 8, static_cast<int>(zero.size()));
  for (int i = 0; i < from_zero; ++i) out.push_back(zero[rng.below(zero.size())]);
  while (static_cast<int>(out.size()) < count && !nonzero.empty()) {
    out.push_back(nonzero[rng.below(nonzero.size())]);
  }
  return out;
}

}  // namespace

GradCheck check_endi_loss(Rng& rng, int draws, int coordinates) {
  GradCheck g;
  const Vocabulary& vocab = Vocabulary::builtin();
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const EpisodeSpec spec = random_spec(rng, d);
    const Episode episode(spec);
    const View view = make_view(episode, static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_agents))));
    Rng init = rng.child("params", static_cast<std::uint64_t>(d));
    const Params params = Params::random(vocab.size(), 8, spec.n_agents, init, 0.5);

    LossInputs inputs;
    inputs.self_action = static_cast<Action>(rng.below(5));
    inputs.advantage = 2.0 * rng.uniform() - 1.0;
    for (int j = 1; j < spec.n_agents; ++j) inputs.others_actions.push_back(static_cast<Action>(rng.below(5)));
    LossWeights weights;
    weights.regularizer = d % 3 == 0 ? Regularizer::dis : Regularizer::num;
    StepOptions options;
    options.mode = MaskMode::relaxed;
    options.tau = 0.5 + rng.uniform();
    ad::Tensor noise({static_cast<int>(view.entities.size()), 2});
    for (double& v : noise.data()) v = rng.gumbel();
    options.noise = noise;

    Rng unused(0);
    const LossReport at = endi_loss(view, params, vocab, inputs, weights, unused, options);
    auto loss_at = [&](const Params& p) {
      return endi_loss(view, p, vocab, inputs, weights, unused, options).total;
    };
    const auto grads = at.grad.named();
    for (const auto& [p, i] : pick_coordinates(at.grad, rng, coordinates)) {
      Params plus = params, minus = params;
      (*plus.named()[p].second)[i] += h;
      (*minus.named()[p].second)[i] -= h;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2 * h);
      record(g, (*grads[p].second)[i], numeric);
    }
  }
  return g;
}

GradCheck check_subgoal_logits(Rng& rng, int draws, int coordinates) {
  GradCheck g;
  const Vocabulary& vocab = Vocabulary::builtin();
  for (int d = 0; d < draws; ++d, ++g.draws) {
    const EpisodeSpec spec = random_spec(rng, d);
    const Episode episode(spec);
    const View view = make_view(episode, 0);
    if (view.entities.empty()) continue;
    Rng init = rng.child("params", static_cast<std::uint64_t>(d));
    const Params params = Params::random(vocab.size(), 8, spec.n_agents, init, 0.5);
    const int e = static_cast<int>(rng.below(view.entities.size()));
    const int side = static_cast<int>(rng.below(2));
    const LogitGradient at = subgoal_logit_gradient(view, params, vocab, e, side);
    const auto grads = at.grad.named();
    for (const auto& [p, i] : pick_coordinates(at.grad, rng, coordinates)) {
      Params plus = params, minus = params;
      (*plus.named()[p].second)[i] += h;
      (*minus.named()[p].second)[i] -= h;
      const double numeric = (subgoal_logit_gradient(view, plus, vocab, e, side).value -
                              subgoal_logit_gradient(view, minus, vocab, e, side).value) /
                             (2 * h);
      record(g, (*grads[p].second)[i], numeric);
    }
  }
  return g;
}

}  // namespace langgrid::division
