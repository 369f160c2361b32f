#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtcc/config.hpp"

namespace mtcc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Transmitter/receiver positions for one control interval. V2V link i runs
// from platoon vehicle i to vehicle i + 1.
struct Geometry {
  std::vector<Point> vehicles;
  std::vector<Point> v2i_tx;
  Point bs;

  int num_links() const { return static_cast<int>(vehicles.size()) - 1; }
};

Geometry make_geometry(std::span<const double> vehicle_positions, const RadioConfig& cfg);

// Linear gains for one communication interval.
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int links, int subchannels);

  int links() const { return links_; }
  int subchannels() const { return m_; }

  double& v2v(int i, int m) { return v2v_[i * m_ + m]; }
  double& v2i(int m) { return v2i_[m]; }
  double& v2v_to_bs(int i, int m) { return v2v_bs_[i * m_ + m]; }
  double& bs_to_v2v(int i, int m) { return bs_v2v_[i * m_ + m]; }
  double& cross(int j, int i, int m) { return cross_[(j * links_ + i) * m_ + m]; }

  double v2v(int i, int m) const { return v2v_[i * m_ + m]; }
  double v2i(int m) const { return v2i_[m]; }
  double v2v_to_bs(int i, int m) const { return v2v_bs_[i * m_ + m]; }
  double bs_to_v2v(int i, int m) const { return bs_v2v_[i * m_ + m]; }
  double cross(int j, int i, int m) const { return cross_[(j * links_ + i) * m_ + m]; }

  // Multiplies every gain by `factor`.
  void scale(double factor);

  bool operator==(const ChannelRealization&) const = default;

 private:
  int links_ = 0;
  int m_ = 0;
  std::vector<double> v2v_, v2i_, v2v_bs_, bs_v2v_, cross_;
};

struct ChannelKey {
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;
  int k = 0;
  int t = 0;
};

// Log-distance pathloss, log-normal shadowing drawn per control interval,
// unit-mean Rayleigh power fading drawn per communication interval. A pure
// function of (key, geometry).
ChannelRealization sample_channels(const Geometry& geo, const RadioConfig& cfg, const ChannelKey& key);

double pathloss_gain(double distance, const RadioConfig& cfg);

// Sub-channel and power chosen by one V2V transmitter.
struct LinkAction {
  int channel = -1;       // -1: no sub-channel
  double power_w = 0.0;

  bool occupies(int m) const { return channel == m; }
};

double sinr_v2i(int m, std::span<const LinkAction> alloc, const ChannelRealization& ch, const RadioConfig& cfg);
double sinr_v2v(int i, int m, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                const RadioConfig& cfg);

double shannon_rate(double sinr, const RadioConfig& cfg);
double rate_v2i(int m, std::span<const LinkAction> alloc, const ChannelRealization& ch, const RadioConfig& cfg);
// V2V bit rate summed over sub-channels, bit/s.
double rate_v2v_bits(int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                     const RadioConfig& cfg);
// V2V rate in CAMs per second.
double rate_v2v_cam(int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                    const RadioConfig& cfg);
// V2I rate of sub-channel m with link i removed from it, all others unchanged.
double rate_v2i_without(int m, int i, std::span<const LinkAction> alloc, const ChannelRealization& ch,
                        const RadioConfig& cfg);

}  // namespace mtcc
