#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langgrid/ad.hpp"
#include "langgrid/game.hpp"
#include "langgrid/rng.hpp"
#include "langgrid/types.hpp"

namespace langgrid::division {

// ---- episode view ----

struct CellItem {
  int entity = -1;  // index into View::entities, -1 for agents and inventory
  std::vector<std::string> tokens;
};

/// Everything one agent's decision step consumes.
struct View {
  int height = 0;
  int width = 0;
  std::vector<std::vector<CellItem>> cells;  // height * width, row-major
  std::vector<GridPos> entities;             // live entities, uid order
  std::vector<int> entity_uids;
  std::vector<std::vector<std::string>> manual;
  std::vector<std::string> goal;
  int agent = 0;
  std::vector<GridPos> agents;

  std::vector<GridPos> other_agents() const;
  void place(GridPos p, CellItem item);
};

/// Lower-cases and splits on anything outside [a-z0-9#].
std::vector<std::string> tokenize(std::string_view text);

/// RTFM cells carry entity words, "you"/"ally" and the viewer's inventory words;
/// MESSENGER cells carry "#<symbol>" tokens only.
View make_view(const Episode& episode, int agent);

/// Closed token vocabulary covering every word the builtin corpus and word lists
/// can produce. Unknown tokens are an error.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);
  static const Vocabulary& builtin();
  int index(std::string_view token) const;
  bool contains(std::string_view token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int i) const { return tokens_.at(static_cast<std::size_t>(i)); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// ---- parameters ----

struct GroundParams {
  ad::Tensor embed;   // V x d token embeddings
  ad::Tensor attend;  // d x d, manual features -> token features
  ad::Tensor mix;     // d x d, cell features
  ad::Tensor gate;    // d x d, goal gating
};

struct Params {
  int d = 16;
  GroundParams goal;    // grounding for the two goal representations
  GroundParams policy;  // grounding for the two policy representations
  ad::Tensor mixture_w;  // 2(d+1) x 2, 1x1 projection of the mixture map
  ad::Tensor mixture_b;  // 1 x 2
  ad::Tensor self_w;     // d x 5
  ad::Tensor self_b;     // 1 x 5
  std::vector<ad::Tensor> other_w;  // one d x 5 head per other agent
  std::vector<ad::Tensor> other_b;  // 1 x 5

  static Params zeros(int vocab, int d, int n_agents);
  /// Entries uniform in [-scale, scale].
  static Params random(int vocab, int d, int n_agents, Rng& rng, double scale = 0.3);

  int n_agents() const { return static_cast<int>(other_w.size()) + 1; }
  /// Stable (name, tensor) listing used by checkpoints and gradient reports.
  std::vector<std::pair<std::string, const ad::Tensor*>> named() const;
  std::vector<std::pair<std::string, ad::Tensor*>> named();
  std::size_t parameter_count() const;
};

// ---- subgoal division ----

/// Ground(.) at toy scale: per-cell features (h, w, d).
ad::Tensor ground_toy(const View& view, const GroundParams& params, const Vocabulary& vocab);

/// One 2-way logit row (not selected, selected) per entity, read from the
/// mixture map at the entity cell. Inputs are (h, w, d+1) goal representations
/// whose last channel is the normalized positional feature.
ad::Tensor subgoal_logits(const ad::Tensor& x_self, const ad::Tensor& x_others,
                          const std::vector<GridPos>& entities, const ad::Tensor& mixture_w,
                          const ad::Tensor& mixture_b);

struct SubgoalState {
  ad::Tensor logits;   // K x 2
  ad::Tensor noise;    // K x 2 Gumbel noise
  ad::Tensor relaxed;  // K x 2, rows on the simplex
  std::vector<double> rho;  // P(selected) = sigmoid(l1 - l0)
  std::vector<int> mask;    // hard m, argmax of the perturbed logits
  std::vector<int> complement;
  double tau = 1.0;
};

SubgoalState gumbel_mask(const ad::Tensor& logits, double tau, Rng& rng);
SubgoalState gumbel_mask(const ad::Tensor& logits, const ad::Tensor& noise, double tau);

/// (obs_self, obs_others): obs_self drops entities with m = 0, obs_others drops
/// entities with m = 1. Agent and inventory items are kept in both.
std::pair<View, View> mask_apply(const View& view, const std::vector<int>& mask);

// ---- losses ----

struct ScalarGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Sum over entities of KL(Bernoulli(rho_e) || Bernoulli(1/n)).
ScalarGrad kl_to_target(const std::vector<double>& rho, int n_agents);
/// | count_self - count_others / (n - 1) |.
double reg_num(double count_self, double count_others, int n_agents);
/// sum_e w_e |e - self| + (1 - w_e) |e - nearest other|; w is the self mask or rho.
double reg_dis(const std::vector<double>& self_weight, const std::vector<GridPos>& entities,
               GridPos self, const std::vector<GridPos>& others);

/// Relaxed regularizers over per-entity selection probabilities rho, with
/// gradients d value / d rho. These are what the training loss differentiates.
ScalarGrad reg_num_relaxed(const std::vector<double>& rho, int n_agents);
ScalarGrad reg_dis_relaxed(const std::vector<double>& rho, const std::vector<GridPos>& entities,
                           GridPos self, const std::vector<GridPos>& others);

struct NllResult {
  double value = 0.0;
  bool floored = false;
  std::vector<std::array<double, 5>> grad;  // d value / d prediction
};
inline constexpr double kProbabilityFloor = 1e-12;
NllResult opponent_nll(const std::vector<std::array<double, 5>>& predicted,
                       const std::vector<Action>& actual);

// ---- end-to-end step ----

enum class MaskMode { straight_through, relaxed };
enum class Regularizer { none, num, dis };

struct StepOptions {
  double tau = 1.0;
  MaskMode mode = MaskMode::straight_through;
  /// Fixed mask (bypasses sampling). Used by leakage checks.
  std::optional<std::vector<int>> forced_mask;
  /// Fixed K x 2 Gumbel noise (bypasses the rng).
  std::optional<ad::Tensor> noise;
};

struct StepOutput {
  std::array<double, 5> self_logits{};
  std::vector<std::array<double, 5>> others;  // predicted action distributions
  SubgoalState subgoal;
  std::vector<int> goal_shape;    // (h, w, d+1)
  std::vector<int> policy_shape;  // (h, w, d)
  ad::Tensor pooled_self;         // 1 x d, input to the self head
};

/// Linear action head: pooled (1 x d) * w (d x 5) + b (1 x 5).
std::array<double, 5> policy_head(const ad::Tensor& pooled, const ad::Tensor& w,
                                  const ad::Tensor& b);

StepOutput endi_step(const View& view, const Params& params, const Vocabulary& vocab,
                     Rng& rng, const StepOptions& options = {});

/// One subgoal logit and its gradient with respect to every parameter.
struct LogitGradient {
  double value = 0.0;
  Params grad;
};
LogitGradient subgoal_logit_gradient(const View& view, const Params& params,
                                     const Vocabulary& vocab, int entity, int side);

struct LossWeights {
  double policy = 1.0;
  double opponent = 1.0;
  double kl = 0.1;
  double reg = 0.1;
  Regularizer regularizer = Regularizer::num;
};

struct LossInputs {
  Action self_action = Action::stay;
  double advantage = 0.0;
  std::vector<Action> others_actions;  // one per other agent
};

struct LossReport {
  double policy = 0.0;
  double opponent_nll = 0.0;
  bool nll_floored = false;
  double kl = 0.0;
  double reg_relaxed = 0.0;
  double reg_hard = 0.0;
  double total = 0.0;
  Regularizer regularizer = Regularizer::num;
  Params grad;
  StepOutput step;

  /// key=value lines, one per scalar plus one gradient norm per parameter.
  std::string to_text() const;
};

/// Forward + backward through the whole chain. Requires a forced mask or fixed
/// noise for reproducible finite-difference checks; otherwise draws from rng.
LossReport endi_loss(const View& view, const Params& params, const Vocabulary& vocab,
                     const LossInputs& inputs, const LossWeights& weights, Rng& rng,
                     const StepOptions& options = {});

// ---- checkpoints ----
//
// Little-endian binary:
//   magic "LGCK" | u32 version (1) | u32 d | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 values
void save_checkpoint(std::ostream& out, const Params& params);
Params load_checkpoint(std::istream& in);

}  // namespace langgrid::division
