#include <algorithm>
#include <cmath>

#include "vrem/errors.hpp"
#include "vrem/harness.hpp"

namespace vrem {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<QuantileRow> summarize_quantiles(const std::vector<std::vector<TraceRecord>>& traces,
                                             const std::vector<double>& quantiles) {
  if (traces.size() < 2) throw ArgumentError("need at least two traces");
  // Rows without a metric (status-only rows) are skipped.
  auto rows_of = [](const std::vector<TraceRecord>& t) {
    std::vector<const TraceRecord*> out;
    for (const auto& r : t)
      if (!std::isnan(r.h_sq_norm)) out.push_back(&r);
    return out;
  };
  std::vector<std::vector<const TraceRecord*>> rows;
  for (const auto& t : traces) rows.push_back(rows_of(t));
  for (std::size_t j = 1; j < rows.size(); ++j) {
    bool aligned = rows[j].size() == rows[0].size();
    for (std::size_t i = 0; aligned && i < rows[0].size(); ++i)
      aligned = rows[j][i]->epoch == rows[0][i]->epoch;
    if (!aligned) throw ArgumentError("misaligned cadences between traces 0 and " + std::to_string(j));
  }
  std::vector<QuantileRow> out;
  std::vector<double> h(rows.size()), w(rows.size());
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      h[j] = rows[j][i]->h_sq_norm;
      w[j] = rows[j][i]->W;
    }
    for (double q : quantiles) out.push_back({rows[0][i]->epoch, q, quantile(h, q), quantile(w, q)});
  }
  return out;
}

std::vector<QuantileRow> summarize_quantiles(const std::vector<std::string>& trace_files,
                                             const std::vector<double>& quantiles) {
  std::vector<std::vector<TraceRecord>> traces;
  for (const auto& f : trace_files) traces.push_back(read_trace_csv(f));
  return summarize_quantiles(traces, quantiles);
}

void write_quantiles_csv(std::ostream& os, const std::vector<QuantileRow>& rows) {
  os << "epoch,quantile,h_sq_norm,W\n";
  for (const auto& r : rows)
    os << r.epoch << ',' << format_double(r.quantile) << ',' << format_double(r.h_sq_norm) << ','
       << format_double(r.W) << "\n";
}

}  // namespace vrem
