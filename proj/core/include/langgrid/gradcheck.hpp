#pragma once

#include <cstdint>

#include "langgrid/rng.hpp"

namespace langgrid::division {

inline constexpr double kFiniteDifferenceStep = 1e-5;
/// Denominator floor for the relative error; below it the error is absolute.
inline constexpr double kRelativeErrorFloor = 1e-3;

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric);

struct GradCheck {
  double max_relative_error = 0.0;
  long coordinates = 0;
  int draws = 0;
};

// Central-difference checks over random draws. Each checks every coordinate of
// the loss's direct inputs.
GradCheck check_opponent_nll(Rng& rng, int draws);
GradCheck check_kl_to_target(Rng& rng, int draws);
GradCheck check_reg_num(Rng& rng, int draws);
GradCheck check_reg_dis(Rng& rng, int draws);
/// Whole-chain loss in relaxed-mask mode with pinned Gumbel noise, on views of
/// generated RTFM and MESSENGER episodes. Checks `coordinates` parameter
/// coordinates per draw, most of them with a nonzero analytic gradient.
GradCheck check_endi_loss(Rng& rng, int draws, int coordinates = 64);
/// Subgoal logits w.r.t. the mixture projection and goal grounding parameters.
GradCheck check_subgoal_logits(Rng& rng, int draws, int coordinates = 32);

}  // namespace langgrid::division
