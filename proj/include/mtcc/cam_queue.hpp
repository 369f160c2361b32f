#pragma once

#include <deque>
#include <optional>

#include "mtcc/platoon.hpp"

namespace mtcc {

// Fractional CAM backlog of one V2V link, bounded to [0, capacity].
class CamQueue {
 public:
  explicit CamQueue(int capacity = 5) : capacity_(capacity) {}

  double length() const { return q_; }
  int capacity() const { return capacity_; }

  // One communication interval. A new CAM arrives on t == 0.
  void step(double rate_cam, int t);
  // Replacement policy used by the delay/AoI baselines: any undelivered CAM is
  // discarded and the queue holds exactly the fresh one.
  void replace_with_fresh() { q_ = 1.0; }
  void reset(double q = 0.0) { q_ = q; }

 private:
  int capacity_;
  double q_ = 0.0;
};

// q' after one communication interval at `rate_cam` CAMs/s (1 ms slots).
double queue_step(double q, double rate_cam, int t, int capacity);

// Age in control intervals of the freshest fully delivered CAM, from the
// backlog at the control-interval boundary: ceil(q) + 1.
int observation_delay(double q_at_boundary);

// Payloads sampled by a predecessor, newest last. Keeps `depth` entries.
class MessageLog {
 public:
  struct Entry {
    int sample_k;
    VehicleKinematics payload;
  };

  explicit MessageLog(int depth = 6) : depth_(depth) {}

  void record(int k, const VehicleKinematics& payload);
  // Payload sampled at interval k - delay, if still retained.
  std::optional<Entry> consume(int k, int delay) const;
  int size() const { return static_cast<int>(entries_.size()); }

 private:
  int depth_;
  std::deque<Entry> entries_;
};

}  // namespace mtcc
