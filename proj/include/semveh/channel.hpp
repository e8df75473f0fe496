#pragma once

#include <utility>
#include <vector>

#include "semveh/config.hpp"
#include "semveh/rng.hpp"
#include "semveh/types.hpp"

namespace semveh {

enum class LinkKind { kV2I, kV2V };

struct Vec3 {
  Scalar x = 0.0, y = 0.0, z = 0.0;
};

inline Scalar distance(const Vec3& a, const Vec3& b) {
  const Scalar dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Vehicle/BS geometry. Vehicles drive along x-axis lanes and wrap around at
/// road_length; the pair list fixes which vehicle transmits to which.
struct Topology {
  Vec3 bs_position;
  std::vector<Vec3> vehicle_positions;
  std::vector<Scalar> vehicle_speeds_mps;
  std::vector<int> lane_of_vehicle;
  std::vector<std::pair<int, int>> v2v_pairs;  // (tx vehicle, rx vehicle)
  std::vector<int> v2i_tx_vehicle;             // transmitter of V2I link w
  Scalar road_length_m = 0.0;
};

/// Places the vehicle cluster at a random position along the road.
Topology make_topology(const ScenarioConfig& config, Rng& rng);

/// Advances vehicles along their lanes with wraparound. `rng` is reserved for
/// stochastic mobility profiles; the rectilinear default draws nothing.
Topology update_mobility(const Topology& topology, Scalar dt_s, Rng& rng);

/// Large-scale path loss in dB. Distance is clamped below at 1 m.
Scalar path_loss(LinkKind kind, Scalar distance_m, Scalar carrier_freq_hz,
                 PathlossProfile profile = PathlossProfile::kUrban3gpp);

/// Log-normal shadowing (dB) per physical link, resampled per episode.
/// Links terminating at the BS use the V2I deviation, vehicle-to-vehicle
/// links the V2V deviation.
struct ShadowField {
  Vector<> v2i_bs_db;     // W
  Vector<> v2v_bs_db;     // Q
  Vector<> v2v_own_db;    // Q
  Matrix<> v2i_v2v_db;    // W x Q
  Matrix<> v2v_cross_db;  // Q x Q

  static ShadowField zero(int num_v2i, int num_v2v);
};

ShadowField sample_shadowing(const ScenarioConfig& config, Rng& rng);

/// Linear power gains for every link pair, per subband where fast fading is
/// drawn independently. gain = 10^(-PL/10) * 10^(shadow/10) * |g|^2.
struct ChannelState {
  Vector<> h_v2i_bs;               // W (V2I link w on its own subband)
  Matrix<> h_v2v_bs;               // Q x W
  Matrix<> h_v2v_own;              // Q x W
  Matrix<> h_v2i_v2v;              // W x Q
  std::vector<Matrix<>> h_v2v_cross;  // per subband w: Q x Q (tx q' -> rx q)

  // Component logs for tests: path loss in dB per link, fading powers.
  Vector<> pl_v2i_bs_db;
  Vector<> pl_v2v_own_db;
  Matrix<> pl_v2i_v2v_db;
  Matrix<> fade_v2v_own;  // Q x W
};

/// Samples fast fading and combines with path loss + shadowing. With
/// freeze_fading the |g|^2 factor is pinned to 1 (no draws).
ChannelState sample_gains(const Topology& topology, const ScenarioConfig& config,
                          const ShadowField& shadow, Rng& rng, bool freeze_fading = false);

/// SINR of V2I link w (linear ratio), Eq.-(5)-style: own signal over noise
/// plus the V2V transmitters sharing subband w.  subband_choice[q] is the
/// subband of pair q or -1; v2v_power_dbm[q] its transmit power.
Scalar sinr_v2i(int w, const ScenarioConfig& config, ConstRef<VectorInt<>> subband_choice,
                ConstRef<Vector<>> v2v_power_dbm, const ChannelState& ch);

/// SINR of V2V pair q on subband w (linear ratio): own signal over noise,
/// the V2I transmitter of subband w, and other pairs sharing w.
Scalar sinr_v2v(int q, int w, const ScenarioConfig& config, ConstRef<VectorInt<>> subband_choice,
                ConstRef<Vector<>> v2v_power_dbm, const ChannelState& ch);

}  // namespace semveh
