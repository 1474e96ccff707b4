#include "vrem/em_core.hpp"

#include <algorithm>
#include <string>

#include "vrem/errors.hpp"

namespace vrem {
namespace {

// Pairwise combination of block partial sums; the tree shape depends only on
// the number of blocks.
void combine_pairwise(std::vector<double>& parts, std::size_t q, std::size_t lo,
                      std::size_t hi, double* out) {
  if (hi - lo == 1) {
    std::copy_n(parts.data() + lo * q, q, out);
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(q);
  combine_pairwise(parts, q, lo, mid, out);
  combine_pairwise(parts, q, mid, hi, right.data());
  for (std::size_t j = 0; j < q; ++j) out[j] += right[j];
}

double combine_pairwise(const std::vector<double>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return combine_pairwise(parts, lo, mid) + combine_pairwise(parts, mid, hi);
}

void check_indices(std::span<const std::size_t> indices, std::size_t n) {
  if (indices.empty()) throw ArgumentError("minibatch is empty");
  for (std::size_t idx : indices)
    if (idx >= n)
      throw ArgumentError("index " + std::to_string(idx) + " out of range for n = " +
                          std::to_string(n));
}

}  // namespace

ParamPtr m_step(const Model& model, const Dataset& data, const StatVector& s,
                OracleCounters* counters) {
  if (counters) ++counters->mstep;
  return model.m_step(s, data);
}

StatVector minibatch_stats(const Model& model, const Dataset& data,
                           std::span<const std::size_t> indices, const Parameter& theta,
                           OracleCounters* counters) {
  check_indices(indices, data.size());
  const std::size_t q = model.stat_dim();
  const std::size_t p = data.dim();
  const std::size_t m = indices.size();
  const std::size_t blocks = (m + kStatBlockRows - 1) / kStatBlockRows;

  std::vector<double> parts(blocks * q);
  std::vector<double> rows(std::min(m, kStatBlockRows) * p);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = blk * kStatBlockRows;
    const std::size_t count = std::min(kStatBlockRows, m - begin);
    for (std::size_t r = 0; r < count; ++r) {
      const double* src = data.data() + indices[begin + r] * p;
      std::copy_n(src, p, rows.data() + r * p);
    }
    model.block_stats(theta, rows.data(), count, parts.data() + blk * q);
  }
  StatVector out(static_cast<Eigen::Index>(q));
  combine_pairwise(parts, q, 0, blocks, out.data());
  out /= static_cast<double>(m);
  if (counters) counters->ce += m;
  return out;
}

StatVector full_stats(const Model& model, const Dataset& data, const Parameter& theta,
                      OracleCounters* counters) {
  const std::size_t q = model.stat_dim();
  const std::size_t p = data.dim();
  const std::size_t n = data.size();
  const std::size_t blocks = (n + kStatBlockRows - 1) / kStatBlockRows;

  std::vector<double> parts(blocks * q);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = blk * kStatBlockRows;
    const std::size_t count = std::min(kStatBlockRows, n - begin);
    model.block_stats(theta, data.data() + begin * p, count, parts.data() + blk * q);
  }
  StatVector out(static_cast<Eigen::Index>(q));
  combine_pairwise(parts, q, 0, blocks, out.data());
  out /= static_cast<double>(n);
  if (counters) counters->ce += n;
  return out;
}

StatVector sbar_i(const Model& model, const Dataset& data, std::size_t i,
                  const Parameter& theta, OracleCounters* counters) {
  const std::size_t idx[1] = {i};
  return minibatch_stats(model, data, idx, theta, counters);
}

Eigen::MatrixXd per_sample_stats(const Model& model, const Dataset& data,
                                 std::span<const std::size_t> indices, const Parameter& theta,
                                 OracleCounters* counters) {
  if (!indices.empty()) check_indices(indices, data.size());
  const std::size_t q = model.stat_dim();
  const std::size_t p = data.dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    model.block_stats(theta, data.data() + indices[j] * p, 1, out.col(static_cast<Eigen::Index>(j)).data());
  if (counters) counters->ce += indices.size();
  return out;
}

StatVector mean_field(const Model& model, const Dataset& data, const StatVector& s,
                      OracleCounters* counters) {
  const ParamPtr theta = m_step(model, data, s, counters);
  return full_stats(model, data, *theta, counters) - s;
}

double penalized_nll(const Model& model, const Dataset& data, const Parameter& theta) {
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  const std::size_t blocks = (n + kStatBlockRows - 1) / kStatBlockRows;
  std::vector<double> parts(blocks);
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t begin = blk * kStatBlockRows;
    const std::size_t count = std::min(kStatBlockRows, n - begin);
    parts[blk] = model.block_nll(theta, data.data() + begin * p, count);
  }
  return combine_pairwise(parts, 0, blocks) / static_cast<double>(n) +
         model.regularizer(theta);
}

double objective(const Model& model, const Dataset& data, const StatVector& s,
                 OracleCounters* counters) {
  const ParamPtr theta = m_step(model, data, s, counters);
  return penalized_nll(model, data, *theta);
}

}  // namespace vrem
