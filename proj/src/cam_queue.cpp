#include "mtcc/cam_queue.hpp"

#include <algorithm>
#include <cmath>

namespace mtcc {

double queue_step(double q, double rate_cam, int t, int capacity) {
  const double drained = std::max(0.0, q - 1e-3 * rate_cam);
  if (t == 0) return std::min(static_cast<double>(capacity), drained + 1.0);
  return drained;
}

void CamQueue::step(double rate_cam, int t) { q_ = queue_step(q_, rate_cam, t, capacity_); }

int observation_delay(double q_at_boundary) { return static_cast<int>(std::ceil(q_at_boundary)) + 1; }

void MessageLog::record(int k, const VehicleKinematics& payload) {
  entries_.push_back({k, payload});
  while (static_cast<int>(entries_.size()) > depth_) entries_.pop_front();
}

std::optional<MessageLog::Entry> MessageLog::consume(int k, int delay) const {
  const int want = k - delay;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->sample_k == want) return *it;
  return std::nullopt;
}

}  // namespace mtcc
