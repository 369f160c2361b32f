#include "mtcc/channel.hpp"

#include <algorithm>
#include <cmath>

#include "mtcc/rng.hpp"

namespace mtcc {

namespace {

// Stream tags for the keyed generator.
enum : std::uint64_t { kShadow = 1, kFading = 2 };
enum : std::uint64_t { kV2V = 1, kV2I, kV2VToBs, kBsToV2V, kCross };

double distance(const Point& a, const Point& b, const RadioConfig& cfg) {
  return std::max(cfg.min_distance, std::hypot(a.x - b.x, a.y - b.y));
}

struct GainDrawer {
  const RadioConfig& cfg;
  const ChannelKey& key;

  double operator()(const Point& tx, const Point& rx, std::uint64_t type, int a, int b, int m) const {
    double g = pathloss_gain(distance(tx, rx, cfg), cfg);
    if (cfg.shadowing_std_db > 0) {
      // Shadowing is shared by all sub-channels of a link within one control interval.
      Rng r(hash_key({key.seed, key.episode, kShadow, static_cast<std::uint64_t>(key.k), type,
                      static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)}));
      g *= std::pow(10.0, cfg.shadowing_std_db * r.normal() / 10.0);
    }
    if (cfg.rayleigh_fading) {
      Rng r(hash_key({key.seed, key.episode, kFading, static_cast<std::uint64_t>(key.k),
                      static_cast<std::uint64_t>(key.t), type, static_cast<std::uint64_t>(a),
                      static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(m)}));
      g *= r.exponential();
    }
    return g;
  }
};

double v2v_power_on(const LinkAction& a, int m) { return a.occupies(m) ? a.power_w : 0.0; }

}  // namespace

Geometry make_geometry(std::span<const double> vehicle_positions, const RadioConfig& cfg) {
  Geometry g;
  for (double p : vehicle_positions) g.vehicles.push_back({p, 0.0});
  const double lead = vehicle_positions.empty() ? 0.0 : vehicle_positions.front();
  for (double off : cfg.v2i_offsets) g.v2i_tx.push_back({lead + off, cfg.v2i_lane_y});
  g.bs = {cfg.bs_x, cfg.bs_y};
  return g;
}

ChannelRealization::ChannelRealization(int links, int subchannels)
    : links_(links),
      m_(subchannels),
      v2v_(links * subchannels),
      v2i_(subchannels),
      v2v_bs_(links * subchannels),
      bs_v2v_(links * subchannels),
      cross_(links * links * subchannels) {}

void ChannelRealization::scale(double factor) {
  for (auto* v : {&v2v_, &v2i_, &v2v_bs_, &bs_v2v_, &cross_})
    for (double& g : *v) g *= factor;
}

double pathloss_gain(double distance, const RadioConfig& cfg) {
  const double loss_db = cfg.pathloss_ref_db + 10.0 * cfg.pathloss_exponent * std::log10(distance);
  return std::pow(10.0, -loss_db / 10.0);
}

ChannelRealization sample_channels(const Geometry& geo, const RadioConfig& cfg, const ChannelKey& key) {
  const int L = geo.num_links();
  const int M = cfg.num_v2i;
  ChannelRealization ch(L, M);
  GainDrawer draw{cfg, key};
  for (int m = 0; m < M; ++m) {
    ch.v2i(m) = draw(geo.v2i_tx[m], geo.bs, kV2I, m, 0, m);
    for (int i = 0; i < L; ++i) {
      const Point& tx = geo.vehicles[i];
      const Point& rx = geo.vehicles[i + 1];
      ch.v2v(i, m) = draw(tx, rx, kV2V, i, 0, m);
      ch.v2v_to_bs(i, m) = draw(tx, geo.bs, kV2VToBs, i, 0, m);
      ch.bs_to_v2v(i, m) = draw(geo.v2i_tx[m], rx, kBsToV2V, m, i, m);
      for (int j = 0; j < L; ++j) {
        if (j == i) {
          ch.cross(j, i, m) = ch.v2v(i, m);
          continue;
        }
        ch.cross(j, i, m) = draw(geo.vehicles[j], rx, kCross, j, i, m);
      }
    }
  }
  return ch;
}

double sinr_v2i(int m, std::span<const LinkAction> alloc, const ChannelRealization& ch, const RadioConfig& cfg) {
  double interference = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i)
    interference += v2v_power_on(alloc[i], m) * ch.v2v_to_bs(static_cast<int>(i), m);
  return cfg.v2i_power_w * ch.v2i(m) / (cfg.noise_w + interference);
}

double sinr_v2v(int i, int m, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                const RadioConfig& cfg) {
  const double signal = v2v_power_on(alloc[i], m) * ch.v2v(i, m);
  double interference = cfg.v2i_power_w * ch.bs_to_v2v(i, m);
  for (std::size_t j = 0; j < alloc.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    interference += v2v_power_on(alloc[j], m) * ch.cross(static_cast<int>(j), i, m);
  }
  return signal / (cfg.noise_w + interference);
}

double shannon_rate(double sinr, const RadioConfig& cfg) { return cfg.bandwidth * std::log2(1.0 + sinr); }

double rate_v2i(int m, std::span<const LinkAction> alloc, const ChannelRealization& ch, const RadioConfig& cfg) {
  return shannon_rate(sinr_v2i(m, alloc, ch, cfg), cfg);
}

double rate_v2v_bits(int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                     const RadioConfig& cfg) {
  double sum = 0.0;
  for (int m = 0; m < cfg.num_v2i; ++m) sum += shannon_rate(sinr_v2v(i, m, alloc, ch, cfg), cfg);
  return sum;
}

double rate_v2v_cam(int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                    const RadioConfig& cfg) {
  return rate_v2v_bits(i, alloc, ch, cfg) / cfg.cam_bits;
}

double rate_v2i_without(int m, int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                        const RadioConfig& cfg) {
  std::vector<LinkAction> without(alloc.begin(), alloc.end());
  if (without[i].occupies(m)) without[i].channel = -1;
  return rate_v2i(m, without, ch, cfg);
}

}  // namespace mtcc
