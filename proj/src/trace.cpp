#include "mtcc/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mtcc {

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {"episode", "kind", "k",     "t", "i", "e_p",
                                                "e_v",     "acc",  "a",     "tau", "m", "power_dbm",
                                                "q",       "r_m",  "reward"};
  return cols;
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

namespace {

std::string opt_int(int v, int na) { return v == na ? std::string() : std::to_string(v); }

std::vector<std::string> cells(const TraceRow& r) {
  return {std::to_string(r.episode), r.kind,
          std::to_string(r.k),       opt_int(r.t, -1),
          std::to_string(r.i),       format_number(r.e_p),
          format_number(r.e_v),      format_number(r.acc),
          format_number(r.a),        opt_int(r.tau, 0),
          opt_int(r.m, -2),          format_number(r.power_dbm),
          format_number(r.q),        format_number(r.r_m),
          format_number(r.reward)};
}

double parse_double(const std::string& s) {
  if (s.empty()) return kNa;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::runtime_error("bad number in trace: " + s);
  return v;
}

int parse_int(const std::string& s, int na) {
  if (s.empty()) return na;
  return std::stoi(s);
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, bool header) {
  if (header) {
    const auto& cols = trace_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
  }
  for (const auto& r : rows) {
    const auto cs = cells(r);
    for (std::size_t c = 0; c < cs.size(); ++c) out << (c ? "," : "") << cs[c];
    out << '\n';
  }
}

void write_trace_jsonl(std::ostream& out, const std::vector<TraceRow>& rows) {
  const auto& cols = trace_columns();
  for (const auto& r : rows) {
    const auto cs = cells(r);
    nlohmann::ordered_json j;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cs[c].empty()) j[cols[c]] = nullptr;
      else if (cols[c] == "kind") j[cols[c]] = cs[c];
      else j[cols[c]] = nlohmann::ordered_json::parse(cs[c]);
    }
    out << j.dump() << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace is empty");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cs;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cs.push_back(c);
    if (!line.empty() && line.back() == ',') cs.emplace_back();
    if (cs.size() != trace_columns().size()) throw std::runtime_error("trace row has the wrong column count");
    TraceRow r;
    r.episode = std::stoi(cs[0]);
    r.kind = cs[1];
    r.k = std::stoi(cs[2]);
    r.t = parse_int(cs[3], -1);
    r.i = std::stoi(cs[4]);
    r.e_p = parse_double(cs[5]);
    r.e_v = parse_double(cs[6]);
    r.acc = parse_double(cs[7]);
    r.a = parse_double(cs[8]);
    r.tau = parse_int(cs[9], 0);
    r.m = parse_int(cs[10], -2);
    r.power_dbm = parse_double(cs[11]);
    r.q = parse_double(cs[12]);
    r.r_m = parse_double(cs[13]);
    r.reward = parse_double(cs[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mtcc
