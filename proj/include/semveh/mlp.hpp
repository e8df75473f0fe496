#pragma once

#include <vector>

#include "semveh/rng.hpp"
#include "semveh/types.hpp"

namespace semveh {

struct MlpCache {
  Matrix<> input;               // batch x in
  std::vector<Matrix<>> hidden;  // post-tanh activations per hidden layer
};

struct MlpGrads {
  std::vector<Matrix<>> weights;
  std::vector<Vector<>> biases;

  void setZero();
  Scalar squared_norm() const;
  void scale(Scalar s);
};

/// Fully connected network, tanh on hidden layers, linear output. Rows of
/// the input matrix are samples.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden_dims, int output_dim);

  /// Xavier-uniform init; the output layer is scaled by `final_scale`
  /// (small values keep initial policies near-uniform).
  void init(Rng& rng, Scalar final_scale = 1.0);

  Matrix<> forward(ConstRef<Matrix<>> x) const;
  Matrix<> forward(ConstRef<Matrix<>> x, MlpCache& cache) const;

  /// Accumulates parameter gradients for dL/d(output) into `grads`.
  void backward(const MlpCache& cache, ConstRef<Matrix<>> d_output, MlpGrads& grads) const;

  MlpGrads zero_grads() const;
  int num_params() const;
  Vector<> flatten() const;
  void unflatten(ConstRef<Vector<>> flat);
  static Vector<> flatten_grads(const MlpGrads& grads);
  bool all_finite() const;

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  std::vector<Matrix<>> weights;  // layer p: n_p x n_{p-1}
  std::vector<Vector<>> biases;

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<int> sizes_;  // input, hidden..., output
};

/// Adam with bias correction, one instance per network.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(const Mlp& model, Scalar beta1 = 0.9, Scalar beta2 = 0.999,
                         Scalar eps = 1e-8);

  void step(Mlp& model, const MlpGrads& grads, Scalar lr);
  long timestep() const { return t_; }
  void set_timestep(long t) { t_ = t; }

  std::vector<Matrix<>> m_w, v_w;
  std::vector<Vector<>> m_b, v_b;

  Scalar beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

 private:
  long t_ = 0;
};

/// Linear decay from lr_initial to lr_final across `total` iterations.
Scalar lr_schedule(Scalar lr_initial, Scalar lr_final, int iteration, int total);

/// Global gradient-norm clipping; returns the pre-clip norm.
Scalar clip_grad_norm(MlpGrads& grads, Scalar max_norm);

}  // namespace semveh
