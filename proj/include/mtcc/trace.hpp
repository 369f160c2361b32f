#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace mtcc {

inline constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

// One per-step record. kind "pc" rows describe a vehicle at control interval
// k (the leader included, with no delay); kind "rra" rows describe one V2V
// transmitter at communication interval (k, t). Fields that do not apply are
// NaN and are written as empty cells.
struct TraceRow {
  std::string kind;
  int episode = 0;
  int k = 0;
  int t = -1;
  int i = 0;
  double e_p = kNa;
  double e_v = kNa;
  double acc = kNa;
  double a = kNa;
  int tau = 0;  // 0: n/a
  int m = -2;   // -2: n/a, -1: no sub-channel
  double power_dbm = kNa;
  double q = kNa;
  double r_m = kNa;
  double reward = kNa;
};

const std::vector<std::string>& trace_columns();

// Shortest round-trip decimal form; NaN becomes an empty string.
std::string format_number(double v);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, bool header = true);
void write_trace_jsonl(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

}  // namespace mtcc
