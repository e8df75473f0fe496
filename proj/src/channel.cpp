#include "semveh/channel.hpp"

#include <stdexcept>

#include "semveh/units.hpp"

namespace semveh {

namespace {

constexpr int kNumLanes = 4;

Scalar wrap(Scalar x, Scalar length) {
  x = std::fmod(x, length);
  if (x < 0.0) x += length;
  return x;
}

Scalar shadow_linear(Scalar db) { return db_to_linear(db); }

}  // namespace

Topology make_topology(const ScenarioConfig& config, Rng& rng) {
  const int I = config.num_vehicles;
  if (I < 2 && config.num_v2v >= 1) {
    throw std::invalid_argument("make_topology: V2V pairs require at least 2 vehicles");
  }
  Topology topo;
  topo.road_length_m = config.road_length_m;
  topo.bs_position = {config.road_length_m / 2.0, -2.0 * config.lane_width_m,
                      config.bs_height_m};

  // Vehicles travel in two-vehicle convoy groups: buddies pair_distance_m
  // apart in the same lane, groups vehicle_spacing_m apart. V2V pairs link
  // buddies, so the own-link path is short while interferers sit in other
  // groups.
  const Scalar cluster_start = rng.uniform(0.0, config.road_length_m);
  topo.vehicle_positions.resize(I);
  topo.vehicle_speeds_mps.assign(I, config.vehicle_speed_mps);
  topo.lane_of_vehicle.resize(I);
  std::vector<Scalar> group_jitter((I + 1) / 2);
  for (auto& j : group_jitter) j = rng.uniform(-0.1, 0.1) * config.vehicle_spacing_m;
  for (int i = 0; i < I; ++i) {
    const int group = i / 2;
    const int lane = group % kNumLanes;
    topo.lane_of_vehicle[i] = lane;
    topo.vehicle_positions[i] = {
        wrap(cluster_start + config.vehicle_spacing_m * group + group_jitter[group] +
                 config.pair_distance_m * (i % 2),
             config.road_length_m),
        config.lane_width_m * (lane + 0.5), config.vehicle_height_m};
  }

  // V2I transmitters are spread evenly over the fleet.
  topo.v2i_tx_vehicle.resize(config.num_v2i);
  for (int w = 0; w < config.num_v2i; ++w) {
    topo.v2i_tx_vehicle[w] =
        config.num_v2i <= I ? static_cast<int>((static_cast<long>(w) * I) / config.num_v2i)
                            : w % I;
  }

  // Pairs link disjoint buddy groups while they fit, reciprocal buddies
  // otherwise (the Q = I default).
  topo.v2v_pairs.resize(config.num_v2v);
  for (int q = 0; q < config.num_v2v; ++q) {
    if (2 * config.num_v2v <= I) {
      topo.v2v_pairs[q] = {(2 * q) % I, (2 * q + 1) % I};
    } else {
      const int buddy = (q ^ 1) < I ? (q ^ 1) : (q + 1) % I;
      topo.v2v_pairs[q] = {q % I, buddy};
    }
  }
  return topo;
}

Topology update_mobility(const Topology& topology, Scalar dt_s, Rng& rng) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("update_mobility: dt must be positive");
  (void)rng;
  Topology next = topology;
  for (std::size_t i = 0; i < next.vehicle_positions.size(); ++i) {
    next.vehicle_positions[i].x =
        wrap(next.vehicle_positions[i].x + next.vehicle_speeds_mps[i] * dt_s,
             next.road_length_m);
  }
  return next;
}

Scalar path_loss(LinkKind kind, Scalar distance_m, Scalar carrier_freq_hz,
                 PathlossProfile profile) {
  const Scalar d = std::max(distance_m, 1.0);
  if (profile == PathlossProfile::kFreeSpace) {
    return 32.45 + 20.0 * std::log10(d / 1000.0) + 20.0 * std::log10(carrier_freq_hz / 1.0e6);
  }
  if (kind == LinkKind::kV2I) {
    return 128.1 + 37.6 * std::log10(d / 1000.0);
  }
  return 38.77 + 16.7 * std::log10(d) + 18.2 * std::log10(carrier_freq_hz / 1.0e9);
}

ShadowField ShadowField::zero(int num_v2i, int num_v2v) {
  ShadowField f;
  f.v2i_bs_db = Vector<>::Zero(num_v2i);
  f.v2v_bs_db = Vector<>::Zero(num_v2v);
  f.v2v_own_db = Vector<>::Zero(num_v2v);
  f.v2i_v2v_db = Matrix<>::Zero(num_v2i, num_v2v);
  f.v2v_cross_db = Matrix<>::Zero(num_v2v, num_v2v);
  return f;
}

ShadowField sample_shadowing(const ScenarioConfig& config, Rng& rng) {
  const int W = config.num_v2i;
  const int Q = config.num_v2v;
  ShadowField f = ShadowField::zero(W, Q);
  const Scalar sa = config.shadow_sigma_v2i_db;
  const Scalar sb = config.shadow_sigma_v2v_db;
  for (int w = 0; w < W; ++w) f.v2i_bs_db(w) = rng.normal(0.0, sa);
  for (int q = 0; q < Q; ++q) f.v2v_bs_db(q) = rng.normal(0.0, sa);
  for (int q = 0; q < Q; ++q) f.v2v_own_db(q) = rng.normal(0.0, sb);
  for (int w = 0; w < W; ++w)
    for (int q = 0; q < Q; ++q) f.v2i_v2v_db(w, q) = rng.normal(0.0, sb);
  for (int qs = 0; qs < Q; ++qs)
    for (int qr = 0; qr < Q; ++qr) f.v2v_cross_db(qs, qr) = rng.normal(0.0, sb);
  return f;
}

ChannelState sample_gains(const Topology& topology, const ScenarioConfig& config,
                          const ShadowField& shadow, Rng& rng, bool freeze_fading) {
  const int W = config.num_v2i;
  const int Q = config.num_v2v;
  const Scalar f_hz = config.carrier_freq_hz;
  const PathlossProfile profile = config.pathloss_profile;

  auto fade = [&]() { return freeze_fading ? 1.0 : rng.rayleigh_power(); };

  ChannelState ch;
  ch.h_v2i_bs.resize(W);
  ch.h_v2v_bs.resize(Q, W);
  ch.h_v2v_own.resize(Q, W);
  ch.h_v2i_v2v.resize(W, Q);
  ch.h_v2v_cross.assign(W, Matrix<>::Zero(Q, Q));
  ch.pl_v2i_bs_db.resize(W);
  ch.pl_v2v_own_db.resize(Q);
  ch.pl_v2i_v2v_db.resize(W, Q);
  ch.fade_v2v_own.resize(Q, W);

  for (int w = 0; w < W; ++w) {
    const Vec3& tx = topology.vehicle_positions[topology.v2i_tx_vehicle[w]];
    const Scalar pl = path_loss(LinkKind::kV2I, distance(tx, topology.bs_position), f_hz, profile);
    ch.pl_v2i_bs_db(w) = pl;
    ch.h_v2i_bs(w) = db_to_linear(-pl) * shadow_linear(shadow.v2i_bs_db(w)) * fade();
  }
  for (int q = 0; q < Q; ++q) {
    const Vec3& tx = topology.vehicle_positions[topology.v2v_pairs[q].first];
    const Scalar pl = path_loss(LinkKind::kV2I, distance(tx, topology.bs_position), f_hz, profile);
    const Scalar base = db_to_linear(-pl) * shadow_linear(shadow.v2v_bs_db(q));
    for (int w = 0; w < W; ++w) ch.h_v2v_bs(q, w) = base * fade();
  }
  for (int q = 0; q < Q; ++q) {
    const Vec3& tx = topology.vehicle_positions[topology.v2v_pairs[q].first];
    const Vec3& rx = topology.vehicle_positions[topology.v2v_pairs[q].second];
    const Scalar pl = path_loss(LinkKind::kV2V, distance(tx, rx), f_hz, profile);
    ch.pl_v2v_own_db(q) = pl;
    const Scalar base = db_to_linear(-pl) * shadow_linear(shadow.v2v_own_db(q));
    for (int w = 0; w < W; ++w) {
      const Scalar g = fade();
      ch.fade_v2v_own(q, w) = g;
      ch.h_v2v_own(q, w) = base * g;
    }
  }
  for (int w = 0; w < W; ++w) {
    const Vec3& tx = topology.vehicle_positions[topology.v2i_tx_vehicle[w]];
    for (int q = 0; q < Q; ++q) {
      const Vec3& rx = topology.vehicle_positions[topology.v2v_pairs[q].second];
      const Scalar pl = path_loss(LinkKind::kV2V, distance(tx, rx), f_hz, profile);
      ch.pl_v2i_v2v_db(w, q) = pl;
      ch.h_v2i_v2v(w, q) = db_to_linear(-pl) * shadow_linear(shadow.v2i_v2v_db(w, q)) * fade();
    }
  }
  for (int qs = 0; qs < Q; ++qs) {
    const Vec3& tx = topology.vehicle_positions[topology.v2v_pairs[qs].first];
    for (int qr = 0; qr < Q; ++qr) {
      if (qs == qr) continue;
      const Vec3& rx = topology.vehicle_positions[topology.v2v_pairs[qr].second];
      const Scalar pl = path_loss(LinkKind::kV2V, distance(tx, rx), f_hz, profile);
      const Scalar base = db_to_linear(-pl) * shadow_linear(shadow.v2v_cross_db(qs, qr));
      for (int w = 0; w < W; ++w) ch.h_v2v_cross[w](qs, qr) = base * fade();
    }
  }
  return ch;
}

Scalar sinr_v2i(int w, const ScenarioConfig& config, ConstRef<VectorInt<>> subband_choice,
                ConstRef<Vector<>> v2v_power_dbm, const ChannelState& ch) {
  const Scalar signal = dbm_to_watts(config.v2i_power_dbm) * ch.h_v2i_bs(w);
  Scalar denom = dbm_to_watts(config.noise_a_dbm);
  for (int q = 0; q < subband_choice.size(); ++q) {
    if (subband_choice(q) == w) {
      denom += dbm_to_watts(v2v_power_dbm(q)) * ch.h_v2v_bs(q, w);
    }
  }
  return signal / denom;
}

Scalar sinr_v2v(int q, int w, const ScenarioConfig& config, ConstRef<VectorInt<>> subband_choice,
                ConstRef<Vector<>> v2v_power_dbm, const ChannelState& ch) {
  const Scalar signal = dbm_to_watts(v2v_power_dbm(q)) * ch.h_v2v_own(q, w);
  Scalar denom = dbm_to_watts(config.noise_b_dbm) +
                 dbm_to_watts(config.v2i_power_dbm) * ch.h_v2i_v2v(w, q);
  for (int qp = 0; qp < subband_choice.size(); ++qp) {
    if (qp != q && subband_choice(qp) == w) {
      denom += dbm_to_watts(v2v_power_dbm(qp)) * ch.h_v2v_cross[w](qp, q);
    }
  }
  return signal / denom;
}

}  // namespace semveh
