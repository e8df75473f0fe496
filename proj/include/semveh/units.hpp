#pragma once

#include <cmath>
#include <stdexcept>

#include "semveh/types.hpp"

namespace semveh {

/// Converts a power in dBm to watts: 10^((dBm - 30) / 10).
inline Scalar dbm_to_watts(Scalar dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Converts a power in watts to dBm. Throws on non-positive input.
inline Scalar watts_to_dbm(Scalar watts) {
  if (!(watts > 0.0)) {
    throw std::invalid_argument("watts_to_dbm: power must be positive, got " +
                                std::to_string(watts));
  }
  return 10.0 * std::log10(watts) + 30.0;
}

inline Scalar db_to_linear(Scalar db) { return std::pow(10.0, db / 10.0); }

inline Scalar linear_to_db(Scalar linear) {
  if (!(linear > 0.0)) {
    throw std::invalid_argument("linear_to_db: ratio must be positive");
  }
  return 10.0 * std::log10(linear);
}

}  // namespace semveh
