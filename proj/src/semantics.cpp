#include "semveh/semantics.hpp"

#include "semveh/units.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semveh {

namespace {

// Index of the grid cell containing v, clamping to the grid; returns the
// lower index and the interpolation weight.
std::pair<std::size_t, Scalar> locate(const std::vector<Scalar>& grid, Scalar v, bool* clamped) {
  if (v <= grid.front()) {
    if (v < grid.front()) *clamped = true;
    return {0, 0.0};
  }
  if (v >= grid.back()) {
    if (v > grid.back()) *clamped = true;
    return {grid.size() - 2, 1.0};
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  const std::size_t lo = hi - 1;
  return {lo, (v - grid[lo]) / (grid[hi] - grid[lo])};
}

}  // namespace

SimilarityModel SimilarityModel::parametric() { return SimilarityModel{}; }

SimilarityModel SimilarityModel::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("similarity table: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("similarity table: empty file " + path);
  if (line.find("u") == std::string::npos || line.find("sinr_db") == std::string::npos) {
    throw std::runtime_error("similarity table: expected header 'u,sinr_db,xi' in " + path);
  }
  std::vector<Scalar> us, sinrs, xis;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Scalar vals[3];
    for (int k = 0; k < 3; ++k) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error("similarity table: short row '" + line + "'");
      }
      vals[k] = std::stod(cell);
    }
    us.push_back(vals[0]);
    sinrs.push_back(vals[1]);
    xis.push_back(vals[2]);
  }
  std::vector<Scalar> u_axis(us), sinr_axis(sinrs);
  std::sort(u_axis.begin(), u_axis.end());
  u_axis.erase(std::unique(u_axis.begin(), u_axis.end()), u_axis.end());
  std::sort(sinr_axis.begin(), sinr_axis.end());
  sinr_axis.erase(std::unique(sinr_axis.begin(), sinr_axis.end()), sinr_axis.end());
  if (u_axis.size() < 2 || sinr_axis.size() < 2) {
    throw std::runtime_error("similarity table: grid needs at least 2x2 points");
  }
  if (us.size() != u_axis.size() * sinr_axis.size()) {
    throw std::runtime_error("similarity table: rows do not form a full grid");
  }
  SimilarityModel m;
  m.kind = Kind::kTable;
  m.table_u = u_axis;
  m.table_sinr_db = sinr_axis;
  m.table_xi = Matrix<>::Zero(static_cast<Index>(u_axis.size()),
                              static_cast<Index>(sinr_axis.size()));
  for (std::size_t r = 0; r < us.size(); ++r) {
    const auto iu = std::lower_bound(u_axis.begin(), u_axis.end(), us[r]) - u_axis.begin();
    const auto is = std::lower_bound(sinr_axis.begin(), sinr_axis.end(), sinrs[r]) - sinr_axis.begin();
    m.table_xi(iu, is) = xis[r];
  }
  return m;
}

Scalar similarity(const SimilarityModel& model, Scalar u, Scalar sinr_db) {
  if (!std::isfinite(sinr_db)) throw std::invalid_argument("similarity: sinr must be finite");
  Scalar xi;
  if (model.kind == SimilarityModel::Kind::kParametric) {
    const Scalar threshold = model.g0_db - model.g1_db_per_unit * u;
    xi = model.xi_max * logistic(model.slope * (sinr_db - threshold));
  } else {
    bool clamped = false;
    const auto [iu, tu] = locate(model.table_u, u, &clamped);
    const auto [is, ts] = locate(model.table_sinr_db, sinr_db, &clamped);
    if (clamped) model.clamped_query = true;
    const Scalar v00 = model.table_xi(iu, is);
    const Scalar v01 = model.table_xi(iu, is + 1);
    const Scalar v10 = model.table_xi(iu + 1, is);
    const Scalar v11 = model.table_xi(iu + 1, is + 1);
    xi = (1 - tu) * ((1 - ts) * v00 + ts * v01) + tu * ((1 - ts) * v10 + ts * v11);
  }
  return std::clamp(xi, 0.0, 1.0);
}

Scalar cosine_similarity(ConstRef<Vector<>> x, ConstRef<Vector<>> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero vector");
  }
  return std::abs(x.dot(y)) / (nx * ny);
}

Scalar binary_cross_entropy(ConstRef<Vector<>> q, ConstRef<Vector<>> p) {
  if (q.size() != p.size()) {
    throw std::invalid_argument("binary_cross_entropy: length mismatch");
  }
  constexpr Scalar kEps = 1e-12;
  Scalar loss = 0.0;
  for (Index l = 0; l < q.size(); ++l) {
    const Scalar pl = std::clamp(p(l), kEps, 1.0 - kEps);
    loss -= q(l) * std::log(pl) + (1.0 - q(l)) * std::log(1.0 - pl);
  }
  return loss;
}

Scalar mutual_information_exact(ConstRef<Matrix<>> joint) {
  if ((joint.array() < 0.0).any()) {
    throw std::invalid_argument("mutual_information_exact: negative probability");
  }
  const Scalar total = joint.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("mutual_information_exact: pmf sums to " + std::to_string(total));
  }
  const Vector<> px = joint.rowwise().sum();
  const Vector<> py = joint.colwise().sum();
  Scalar mi = 0.0;
  for (Index i = 0; i < joint.rows(); ++i) {
    for (Index j = 0; j < joint.cols(); ++j) {
      const Scalar pxy = joint(i, j);
      if (pxy > 0.0) mi += pxy * std::log2(pxy / (px(i) * py(j)));
    }
  }
  return mi;
}

Scalar qoe(ConstRef<VectorInt<>> subband_choice, ConstRef<Vector<>> v2v_power_dbm,
           ConstRef<Vector<>> xi, const QoeParams& params) {
  Scalar total = 0.0;
  for (int q = 0; q < subband_choice.size(); ++q) {
    if (subband_choice(q) < 0) continue;
    const Scalar arg_a = params.orientation == QoeOrientation::kAsPaper ? 1.0 - xi(q) : xi(q);
    Scalar power_arg;
    if (params.power_norm == PowerNormalization::kMinmaxDbm) {
      power_arg = (v2v_power_dbm(q) - params.p_min_dbm) / (params.p_max_dbm - params.p_min_dbm);
    } else {
      power_arg = dbm_to_watts(v2v_power_dbm(q));
    }
    total += arg_a * logistic(power_arg);
  }
  return total;
}

}  // namespace semveh
