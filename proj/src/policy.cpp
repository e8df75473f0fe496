#include "semveh/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace semveh {

namespace {

constexpr Scalar kLogStdMin = -5.0;
constexpr Scalar kLogStdMax = 2.0;
constexpr Scalar kHalfLog2PiE = 1.4189385332046727;  // 0.5 * log(2*pi*e)

Scalar normal_log_pdf(Scalar z, Scalar mean, Scalar log_std) {
  const Scalar inv_std = std::exp(-log_std);
  const Scalar d = (z - mean) * inv_std;
  return -0.5 * d * d - log_std - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace

HeadLayout::HeadLayout(const std::vector<int>& head_sizes) : sizes(head_sizes) {
  offsets.reserve(sizes.size());
  for (int s : sizes) {
    offsets.push_back(total);
    total += s;
  }
}

Vector<> log_softmax(ConstRef<Vector<>> logits) {
  const Scalar m = logits.maxCoeff();
  const Vector<> shifted = logits.array() - m;
  const Scalar lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

ActorCritic::ActorCritic(int state_dim, const std::vector<int>& hidden_sizes,
                         const std::vector<int>& head_sizes, const std::string& head_mode,
                         Rng& rng)
    : layout_(head_sizes), head_mode_(head_mode) {
  const int actor_out = head_mode_ == "gaussian" ? 2 * layout_.num_heads() : layout_.total;
  actor = Mlp(state_dim, hidden_sizes, actor_out);
  critic = Mlp(state_dim, hidden_sizes, 1);
  actor.init(rng, 0.01);
  critic.init(rng, 1.0);
}

ActorCritic::ActorCritic(Mlp actor_net, Mlp critic_net, const std::vector<int>& head_sizes,
                         const std::string& head_mode)
    : actor(std::move(actor_net)),
      critic(std::move(critic_net)),
      layout_(head_sizes),
      head_mode_(head_mode) {}

PolicySample ActorCritic::sample(ConstRef<Vector<>> state, Rng& rng) const {
  const Matrix<> logits = actor.forward(state.transpose());
  PolicySample s;
  const int H = layout_.num_heads();
  s.indices.resize(H);
  if (gaussian()) {
    s.gauss_raw.resize(H);
    for (int h = 0; h < H; ++h) {
      const Scalar mean = logits(0, h);
      const Scalar log_std = std::clamp(logits(0, H + h), kLogStdMin, kLogStdMax);
      const Scalar z = mean + std::exp(log_std) * rng.normal();
      s.gauss_raw(h) = z;
      const Scalar t = std::tanh(z);
      const int k = layout_.sizes[h];
      s.indices(h) = std::clamp(static_cast<int>(std::lround((t + 1.0) / 2.0 * (k - 1))), 0, k - 1);
      s.log_prob += normal_log_pdf(z, mean, log_std);
      s.entropy += log_std + kHalfLog2PiE;
    }
    return s;
  }
  for (int h = 0; h < H; ++h) {
    const Vector<> lp = log_softmax(logits.row(0).segment(layout_.offsets[h], layout_.sizes[h]));
    const Vector<> p = lp.array().exp();
    const Scalar r = rng.uniform();
    Scalar acc = 0.0;
    int pick = layout_.sizes[h] - 1;
    for (int k = 0; k < layout_.sizes[h]; ++k) {
      acc += p(k);
      if (r < acc) {
        pick = k;
        break;
      }
    }
    s.indices(h) = pick;
    s.log_prob += lp(pick);
    s.entropy -= (p.array() * lp.array()).sum();
  }
  return s;
}

PolicySample ActorCritic::greedy(ConstRef<Vector<>> state) const {
  const Matrix<> logits = actor.forward(state.transpose());
  PolicySample s;
  const int H = layout_.num_heads();
  s.indices.resize(H);
  if (gaussian()) {
    s.gauss_raw.resize(H);
    for (int h = 0; h < H; ++h) {
      const Scalar mean = logits(0, h);
      const Scalar log_std = std::clamp(logits(0, H + h), kLogStdMin, kLogStdMax);
      s.gauss_raw(h) = mean;
      const Scalar t = std::tanh(mean);
      const int k = layout_.sizes[h];
      s.indices(h) = std::clamp(static_cast<int>(std::lround((t + 1.0) / 2.0 * (k - 1))), 0, k - 1);
      s.log_prob += normal_log_pdf(mean, mean, log_std);
      s.entropy += log_std + kHalfLog2PiE;
    }
    return s;
  }
  for (int h = 0; h < H; ++h) {
    const Vector<> lp = log_softmax(logits.row(0).segment(layout_.offsets[h], layout_.sizes[h]));
    Index pick;
    lp.maxCoeff(&pick);
    s.indices(h) = static_cast<int>(pick);
    s.log_prob += lp(pick);
    const Vector<> p = lp.array().exp();
    s.entropy -= (p.array() * lp.array()).sum();
  }
  return s;
}

void ActorCritic::evaluate_actions(ConstRef<Matrix<>> states, const MatrixInt<>& indices,
                                   ConstRef<Matrix<>> gauss_raw, Vector<>& log_probs,
                                   Vector<>& entropies, Matrix<>& logits_out,
                                   MlpCache& cache) const {
  logits_out = actor.forward(states, cache);
  const Index n = states.rows();
  const int H = layout_.num_heads();
  log_probs = Vector<>::Zero(n);
  entropies = Vector<>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (gaussian()) {
      for (int h = 0; h < H; ++h) {
        const Scalar mean = logits_out(i, h);
        const Scalar log_std = std::clamp(logits_out(i, H + h), kLogStdMin, kLogStdMax);
        log_probs(i) += normal_log_pdf(gauss_raw(i, h), mean, log_std);
        entropies(i) += log_std + kHalfLog2PiE;
      }
      continue;
    }
    for (int h = 0; h < H; ++h) {
      const Vector<> lp =
          log_softmax(logits_out.row(i).segment(layout_.offsets[h], layout_.sizes[h]));
      log_probs(i) += lp(indices(i, h));
      entropies(i) -= (lp.array().exp() * lp.array()).sum();
    }
  }
}

Matrix<> ActorCritic::actor_logits_grad(ConstRef<Matrix<>> logits, const MatrixInt<>& indices,
                                        ConstRef<Matrix<>> gauss_raw,
                                        ConstRef<Vector<>> log_probs_old,
                                        ConstRef<Vector<>> advantages, Scalar clip_epsilon,
                                        Scalar entropy_coef) const {
  const Index n = logits.rows();
  const int H = layout_.num_heads();
  Matrix<> grad = Matrix<>::Zero(logits.rows(), logits.cols());
  const Scalar inv_n = 1.0 / static_cast<Scalar>(n);

  for (Index i = 0; i < n; ++i) {
    // Recompute the joint log-prob (and per-head distributions) for sample i.
    Scalar log_prob_new = 0.0;
    std::vector<Vector<>> head_lp(H);
    if (gaussian()) {
      for (int h = 0; h < H; ++h) {
        const Scalar mean = logits(i, h);
        const Scalar log_std = std::clamp(logits(i, H + h), kLogStdMin, kLogStdMax);
        log_prob_new += normal_log_pdf(gauss_raw(i, h), mean, log_std);
      }
    } else {
      for (int h = 0; h < H; ++h) {
        head_lp[h] = log_softmax(logits.row(i).segment(layout_.offsets[h], layout_.sizes[h]));
        log_prob_new += head_lp[h](indices(i, h));
      }
    }

    const Scalar ratio = std::exp(log_prob_new - log_probs_old(i));
    const Scalar adv = advantages(i);
    const Scalar surr_unclipped = ratio * adv;
    const Scalar surr_clipped =
        std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv;
    // d(min)/d(ratio): the clipped branch has zero gradient when selected
    // and binding.
    const Scalar dobj_dratio = surr_unclipped <= surr_clipped ? adv : 0.0;
    // Minimized loss is -objective; dratio/dlogp_new = ratio.
    const Scalar coef = -inv_n * dobj_dratio * ratio;

    if (gaussian()) {
      for (int h = 0; h < H; ++h) {
        const Scalar mean = logits(i, h);
        const Scalar log_std_raw = logits(i, H + h);
        const Scalar log_std = std::clamp(log_std_raw, kLogStdMin, kLogStdMax);
        const Scalar inv_var = std::exp(-2.0 * log_std);
        const Scalar dz = gauss_raw(i, h) - mean;
        grad(i, h) += coef * dz * inv_var;
        if (log_std_raw > kLogStdMin && log_std_raw < kLogStdMax) {
          grad(i, H + h) += coef * (dz * dz * inv_var - 1.0);
          grad(i, H + h) += -entropy_coef * inv_n;  // dH/dlog_std = 1
        }
      }
      continue;
    }
    for (int h = 0; h < H; ++h) {
      const Vector<> p = head_lp[h].array().exp();
      const Scalar entropy_h = -(p.array() * head_lp[h].array()).sum();
      const int off = layout_.offsets[h];
      for (int k = 0; k < layout_.sizes[h]; ++k) {
        const Scalar onehot = k == indices(i, h) ? 1.0 : 0.0;
        grad(i, off + k) += coef * (onehot - p(k));
        // Entropy bonus: d(-c*H)/dlogit = c * p * (logp + H).
        grad(i, off + k) += entropy_coef * inv_n * p(k) * (head_lp[h](k) + entropy_h);
      }
    }
  }
  return grad;
}

Scalar ActorCritic::value(ConstRef<Vector<>> state) const {
  return critic.forward(state.transpose())(0, 0);
}

Vector<> ActorCritic::values(ConstRef<Matrix<>> states) const {
  return critic.forward(states).col(0);
}

}  // namespace semveh
