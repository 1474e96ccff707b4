#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vrem/errors.hpp"
#include "vrem/harness.hpp"

namespace vrem {
namespace {

constexpr const char* kTraceHeader =
    "epoch,t,k,tau,W,h_sq_norm,ce_count,mstep_count,wall_ms,status,phase";

template <class T>
T parse_field(const std::string& cell, std::size_t row, std::size_t col) {
  if constexpr (std::is_floating_point_v<T>) {
    if (cell == "nan") return std::numeric_limits<T>::quiet_NaN();
    if (cell == "inf") return std::numeric_limits<T>::infinity();
    if (cell == "-inf") return -std::numeric_limits<T>::infinity();
  }
  T v{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw ParseError("bad field '" + cell + "'", row, col);
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& records) {
  os << kTraceHeader << "\n";
  char wall[32];
  for (const TraceRecord& r : records) {
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
    os << r.epoch << ',' << r.t << ',' << r.k << ',' << r.tau << ',' << format_double(r.W) << ','
       << format_double(r.h_sq_norm) << ',' << r.ce_count << ',' << r.mstep_count << ',' << wall
       << ',' << r.status << ',' << r.phase << "\n";
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_trace_csv(out, records);
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ParseError("unexpected trace header in '" + path + "'", 1, 1);
  std::vector<TraceRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 11)
      throw ParseError("expected 11 fields, found " + std::to_string(cells.size()), row, 1);
    TraceRecord r;
    r.epoch = parse_field<std::uint64_t>(cells[0], row, 1);
    r.t = parse_field<std::uint64_t>(cells[1], row, 2);
    r.k = parse_field<std::int64_t>(cells[2], row, 3);
    r.tau = parse_field<std::int64_t>(cells[3], row, 4);
    r.W = parse_field<double>(cells[4], row, 5);
    r.h_sq_norm = parse_field<double>(cells[5], row, 6);
    r.ce_count = parse_field<std::uint64_t>(cells[6], row, 7);
    r.mstep_count = parse_field<std::uint64_t>(cells[7], row, 8);
    r.wall_ms = parse_field<double>(cells[8], row, 9);
    r.status = cells[9];
    r.phase = cells[10];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vrem
