#include "semveh/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace semveh {

void MlpGrads::setZero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

Scalar MlpGrads::squared_norm() const {
  Scalar s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

void MlpGrads::scale(Scalar s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden_dims, int output_dim)
    : input_dim_(input_dim), output_dim_(output_dim) {
  sizes_.push_back(input_dim);
  for (int h : hidden_dims) sizes_.push_back(h);
  sizes_.push_back(output_dim);
  for (std::size_t p = 1; p < sizes_.size(); ++p) {
    weights.emplace_back(Matrix<>::Zero(sizes_[p], sizes_[p - 1]));
    biases.emplace_back(Vector<>::Zero(sizes_[p]));
  }
}

void Mlp::init(Rng& rng, Scalar final_scale) {
  for (std::size_t p = 0; p < weights.size(); ++p) {
    const Scalar fan_in = static_cast<Scalar>(weights[p].cols());
    const Scalar fan_out = static_cast<Scalar>(weights[p].rows());
    Scalar limit = std::sqrt(6.0 / (fan_in + fan_out));
    if (p + 1 == weights.size()) limit *= final_scale;
    for (Index i = 0; i < weights[p].rows(); ++i)
      for (Index j = 0; j < weights[p].cols(); ++j) weights[p](i, j) = rng.uniform(-limit, limit);
    biases[p].setZero();
  }
}

Matrix<> Mlp::forward(ConstRef<Matrix<>> x) const {
  MlpCache cache;
  return forward(x, cache);
}

Matrix<> Mlp::forward(ConstRef<Matrix<>> x, MlpCache& cache) const {
  if (x.cols() != input_dim_) throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  cache.input = x;
  cache.hidden.clear();
  Matrix<> h = x;
  for (std::size_t p = 0; p + 1 < weights.size(); ++p) {
    h = ((h * weights[p].transpose()).rowwise() + biases[p].transpose()).array().tanh();
    cache.hidden.push_back(h);
  }
  return (h * weights.back().transpose()).rowwise() + biases.back().transpose();
}

void Mlp::backward(const MlpCache& cache, ConstRef<Matrix<>> d_output, MlpGrads& grads) const {
  const std::size_t L = weights.size();
  Matrix<> delta = d_output;  // dL/d(pre-activation of layer), starting at the linear output
  for (std::size_t p = L; p-- > 0;) {
    const Matrix<>& act_in = p == 0 ? cache.input : cache.hidden[p - 1];
    grads.weights[p] += delta.transpose() * act_in;
    grads.biases[p] += delta.colwise().sum().transpose();
    if (p == 0) break;
    // Through W_p, then through the tanh of layer p-1.
    delta = (delta * weights[p]).array() * (1.0 - cache.hidden[p - 1].array().square());
  }
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  for (const auto& w : weights) g.weights.push_back(Matrix<>::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) g.biases.push_back(Vector<>::Zero(b.size()));
  return g;
}

int Mlp::num_params() const {
  int n = 0;
  for (const auto& w : weights) n += static_cast<int>(w.size());
  for (const auto& b : biases) n += static_cast<int>(b.size());
  return n;
}

Vector<> Mlp::flatten() const {
  Vector<> flat(num_params());
  Index k = 0;
  for (const auto& w : weights) {
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) flat(k++) = w(i, j);
  }
  for (const auto& b : biases) {
    for (Index i = 0; i < b.size(); ++i) flat(k++) = b(i);
  }
  return flat;
}

void Mlp::unflatten(ConstRef<Vector<>> flat) {
  if (flat.size() != num_params()) throw std::invalid_argument("Mlp::unflatten: size mismatch");
  Index k = 0;
  for (auto& w : weights) {
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = flat(k++);
  }
  for (auto& b : biases) {
    for (Index i = 0; i < b.size(); ++i) b(i) = flat(k++);
  }
}

Vector<> Mlp::flatten_grads(const MlpGrads& grads) {
  Index n = 0;
  for (const auto& w : grads.weights) n += w.size();
  for (const auto& b : grads.biases) n += b.size();
  Vector<> flat(n);
  Index k = 0;
  for (const auto& w : grads.weights) {
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) flat(k++) = w(i, j);
  }
  for (const auto& b : grads.biases) {
    for (Index i = 0; i < b.size(); ++i) flat(k++) = b(i);
  }
  return flat;
}

bool Mlp::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

AdamOptimizer::AdamOptimizer(const Mlp& model, Scalar beta1_, Scalar beta2_, Scalar eps_)
    : beta1(beta1_), beta2(beta2_), eps(eps_) {
  for (const auto& w : model.weights) {
    m_w.push_back(Matrix<>::Zero(w.rows(), w.cols()));
    v_w.push_back(Matrix<>::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : model.biases) {
    m_b.push_back(Vector<>::Zero(b.size()));
    v_b.push_back(Vector<>::Zero(b.size()));
  }
}

void AdamOptimizer::step(Mlp& model, const MlpGrads& grads, Scalar lr) {
  ++t_;
  const Scalar bc1 = 1.0 - std::pow(beta1, static_cast<Scalar>(t_));
  const Scalar bc2 = 1.0 - std::pow(beta2, static_cast<Scalar>(t_));
  for (std::size_t p = 0; p < model.weights.size(); ++p) {
    m_w[p] = beta1 * m_w[p] + (1.0 - beta1) * grads.weights[p];
    v_w[p] = beta2 * v_w[p].array() + (1.0 - beta2) * grads.weights[p].array().square();
    model.weights[p].array() -=
        lr * (m_w[p].array() / bc1) / ((v_w[p].array() / bc2).sqrt() + eps);
    m_b[p] = beta1 * m_b[p] + (1.0 - beta1) * grads.biases[p];
    v_b[p] = beta2 * v_b[p].array() + (1.0 - beta2) * grads.biases[p].array().square();
    model.biases[p].array() -= lr * (m_b[p].array() / bc1) / ((v_b[p].array() / bc2).sqrt() + eps);
  }
}

Scalar lr_schedule(Scalar lr_initial, Scalar lr_final, int iteration, int total) {
  if (total <= 1) return lr_initial;
  const Scalar frac = static_cast<Scalar>(iteration) / static_cast<Scalar>(total - 1);
  return lr_initial + (lr_final - lr_initial) * std::min(1.0, std::max(0.0, frac));
}

Scalar clip_grad_norm(MlpGrads& grads, Scalar max_norm) {
  const Scalar norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace semveh
