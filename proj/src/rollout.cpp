#include "semveh/rollout.hpp"

#include <stdexcept>

namespace semveh {

RolloutBuffer::RolloutBuffer(int capacity, int state_dim, int num_heads, bool gaussian)
    : capacity_(capacity) {
  states = Matrix<>::Zero(capacity, state_dim);
  actions = MatrixInt<>::Zero(capacity, num_heads);
  gauss_raw = gaussian ? Matrix<>::Zero(capacity, num_heads) : Matrix<>::Zero(0, 0);
  log_probs = Vector<>::Zero(capacity);
  rewards = Vector<>::Zero(capacity);
  values = Vector<>::Zero(capacity);
  dones.assign(capacity, 0);
}

void RolloutBuffer::push(ConstRef<Vector<>> state, ConstRef<VectorInt<>> action_indices,
                         ConstRef<Vector<>> gauss, Scalar log_prob, Scalar reward, Scalar value,
                         bool done) {
  if (size_ >= capacity_) throw std::runtime_error("RolloutBuffer: capacity exceeded");
  states.row(size_) = state.transpose();
  actions.row(size_) = action_indices.transpose();
  if (gauss_raw.size() > 0) gauss_raw.row(size_) = gauss.transpose();
  log_probs(size_) = log_prob;
  rewards(size_) = reward;
  values(size_) = value;
  dones[size_] = done ? 1 : 0;
  ++size_;
}

std::pair<Vector<>, Vector<>> gae_advantages(ConstRef<Vector<>> rewards,
                                             ConstRef<Vector<>> values,
                                             const std::vector<std::uint8_t>& dones,
                                             Scalar gamma, Scalar lambda) {
  const Index T = rewards.size();
  if (values.size() != T + 1) {
    throw std::invalid_argument("gae_advantages: values must have rewards.size() + 1 entries");
  }
  if (static_cast<Index>(dones.size()) != T) {
    throw std::invalid_argument("gae_advantages: dones length mismatch");
  }
  Vector<> advantages(T);
  Vector<> targets(T);
  Scalar running = 0.0;
  for (Index t = T; t-- > 0;) {
    const Scalar nonterminal = dones[t] ? 0.0 : 1.0;
    const Scalar delta = rewards(t) + gamma * values(t + 1) * nonterminal - values(t);
    running = delta + gamma * lambda * nonterminal * running;
    advantages(t) = running;
    targets(t) = running + values(t);
  }
  return {advantages, targets};
}

}  // namespace semveh
