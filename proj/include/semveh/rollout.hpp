#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "semveh/types.hpp"

namespace semveh {

/// On-policy trajectory storage for one update. Cleared after every policy
/// update; entries beyond capacity are rejected.
class RolloutBuffer {
 public:
  RolloutBuffer(int capacity, int state_dim, int num_heads, bool gaussian);

  void push(ConstRef<Vector<>> state, ConstRef<VectorInt<>> action_indices,
            ConstRef<Vector<>> gauss_raw, Scalar log_prob, Scalar reward, Scalar value,
            bool done);
  void clear() { size_ = 0; }

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  bool full() const { return size_ == capacity_; }

  Matrix<> states;      // capacity x state_dim
  MatrixInt<> actions;  // capacity x num_heads
  Matrix<> gauss_raw;   // capacity x num_heads (gaussian head mode)
  Vector<> log_probs;
  Vector<> rewards;
  Vector<> values;
  std::vector<std::uint8_t> dones;

 private:
  int capacity_ = 0;
  int size_ = 0;
};

/// Generalized advantage estimation by backward recursion:
///   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
///   A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// `values` carries T entries plus the bootstrap value of the state after
/// the last transition, so values.size() == rewards.size() + 1.
/// Returns (advantages, value targets A + V).
std::pair<Vector<>, Vector<>> gae_advantages(ConstRef<Vector<>> rewards,
                                             ConstRef<Vector<>> values,
                                             const std::vector<std::uint8_t>& dones,
                                             Scalar gamma, Scalar lambda);

}  // namespace semveh
