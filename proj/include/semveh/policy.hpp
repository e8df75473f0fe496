#pragma once

#include <string>
#include <vector>

#include "semveh/mlp.hpp"
#include "semveh/rng.hpp"
#include "semveh/types.hpp"

namespace semveh {

/// Joint distribution over a tuple of categorical heads laid out as
/// consecutive logit segments of one actor output row.
struct HeadLayout {
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;

  explicit HeadLayout(const std::vector<int>& head_sizes);
  HeadLayout() = default;
  int num_heads() const { return static_cast<int>(sizes.size()); }
};

/// One sampled (or given) joint action with its log-probability and the
/// distribution entropy, all summed over heads.
struct PolicySample {
  VectorInt<> indices;   // per head
  Vector<> gauss_raw;    // pre-squash draws (gaussian mode only)
  Scalar log_prob = 0.0;
  Scalar entropy = 0.0;
};

/// Actor-critic pair. The actor emits per-head categorical logits
/// (default) or mean/log-std pairs (gaussian mode, squashed and snapped to
/// the discrete grid); the critic emits a scalar value.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(int state_dim, const std::vector<int>& hidden_sizes,
              const std::vector<int>& head_sizes, const std::string& head_mode, Rng& rng);
  /// Rebuilds around existing networks (checkpoint restore).
  ActorCritic(Mlp actor_net, Mlp critic_net, const std::vector<int>& head_sizes,
              const std::string& head_mode);

  PolicySample sample(ConstRef<Vector<>> state, Rng& rng) const;
  PolicySample greedy(ConstRef<Vector<>> state) const;

  /// Log-prob and entropy of stored actions under the current parameters,
  /// for a batch of states; used by the PPO update.
  void evaluate_actions(ConstRef<Matrix<>> states, const MatrixInt<>& indices,
                        ConstRef<Matrix<>> gauss_raw, Vector<>& log_probs, Vector<>& entropies,
                        Matrix<>& logits_out, MlpCache& cache) const;

  /// Gradient of (-mean PPO-clip objective - entropy_coef * mean entropy)
  /// with respect to the actor logits; consumed by Mlp::backward.
  Matrix<> actor_logits_grad(ConstRef<Matrix<>> logits, const MatrixInt<>& indices,
                             ConstRef<Matrix<>> gauss_raw, ConstRef<Vector<>> log_probs_old,
                             ConstRef<Vector<>> advantages, Scalar clip_epsilon,
                             Scalar entropy_coef) const;

  Scalar value(ConstRef<Vector<>> state) const;
  Vector<> values(ConstRef<Matrix<>> states) const;

  bool gaussian() const { return head_mode_ == "gaussian"; }
  const HeadLayout& layout() const { return layout_; }
  const std::string& head_mode() const { return head_mode_; }

  Mlp actor;
  Mlp critic;

 private:
  HeadLayout layout_;
  std::string head_mode_ = "categorical";
};

/// Log-softmax of one head segment (numerically stable).
Vector<> log_softmax(ConstRef<Vector<>> logits);

}  // namespace semveh
