#pragma once

#include <string>
#include <vector>

#include "semveh/config.hpp"
#include "semveh/types.hpp"

namespace semveh {

/// Surrogate for the learned semantic codec: maps (symbols per word u,
/// link SINR) to a similarity score in [0, 1], non-decreasing in both.
struct SimilarityModel {
  enum class Kind { kParametric, kTable };

  Kind kind = Kind::kParametric;

  // Parametric: xi = xi_max * logistic(slope * (sinr_db - (g0 - g1 * u))).
  Scalar xi_max = 0.995;
  Scalar slope = 0.3;
  Scalar g0_db = 15.0;
  Scalar g1_db_per_unit = 2.5;

  // Table mode: grid over (u, sinr_db) with bilinear interpolation.
  std::vector<Scalar> table_u;        // ascending
  std::vector<Scalar> table_sinr_db;  // ascending
  Matrix<> table_xi;                  // |u| x |sinr|
  mutable bool clamped_query = false;  // set when a table query fell outside the grid

  static SimilarityModel parametric();
  /// Loads a table from CSV with header "u,sinr_db,xi" (row-major grid).
  static SimilarityModel from_csv(const std::string& path);
};

Scalar similarity(const SimilarityModel& model, Scalar u, Scalar sinr_db);

/// |x.y| / (||x|| ||y||); throws on zero vectors or size mismatch.
Scalar cosine_similarity(ConstRef<Vector<>> x, ConstRef<Vector<>> y);

/// -sum_l [q_l log p_l + (1-q_l) log(1-p_l)] in nats; p clipped to
/// [1e-12, 1-1e-12].
Scalar binary_cross_entropy(ConstRef<Vector<>> q, ConstRef<Vector<>> p);

/// Exact mutual information of a finite joint pmf, in bits. 0 log 0 = 0.
Scalar mutual_information_exact(ConstRef<Matrix<>> joint);

/// QoE combinator parameters. theta_a is the identity map, theta_b the
/// logistic; orientation and power normalization follow the scenario flags.
struct QoeParams {
  QoeOrientation orientation = QoeOrientation::kSimilarityReward;
  PowerNormalization power_norm = PowerNormalization::kMinmaxDbm;
  Scalar p_min_dbm = -100.0;
  Scalar p_max_dbm = 23.0;

  static QoeParams from(const ScenarioConfig& config) {
    return {config.qoe_orientation, config.theta_b_power_normalization, config.p_min_dbm,
            config.p_max_dbm};
  }
};

inline Scalar logistic(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Weber-Fechner QoE summed over active pairs: theta_a(arg) * theta_b(power),
/// where arg is xi (similarity_reward) or 1-xi (as_paper). Pairs with
/// subband_choice[q] < 0 contribute 0.
Scalar qoe(ConstRef<VectorInt<>> subband_choice, ConstRef<Vector<>> v2v_power_dbm,
           ConstRef<Vector<>> xi, const QoeParams& params);

}  // namespace semveh
