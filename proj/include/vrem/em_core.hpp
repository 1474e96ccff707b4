#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vrem/dataset.hpp"
#include "vrem/model.hpp"

namespace vrem {

// Number of per-sample conditional expectations (ce) and M-step calls (mstep).
struct OracleCounters {
  std::uint64_t ce = 0;
  std::uint64_t mstep = 0;

  OracleCounters& operator+=(const OracleCounters& o) {
    ce += o.ce;
    mstep += o.mstep;
    return *this;
  }
};

inline constexpr std::size_t kStatBlockRows = 256;

// T(s), counted as one M-step.
ParamPtr m_step(const Model& model, const Dataset& data, const StatVector& s,
                OracleCounters* counters = nullptr);

// (1/|B|) sum_{i in B} sbar_i(theta); duplicates count with multiplicity.
// Rows are processed in index-list order, in blocks of kStatBlockRows whose
// partial sums are combined pairwise, so B = {0..n-1} reproduces full_stats
// bit for bit.
StatVector minibatch_stats(const Model& model, const Dataset& data,
                           std::span<const std::size_t> indices, const Parameter& theta,
                           OracleCounters* counters = nullptr);

StatVector full_stats(const Model& model, const Dataset& data, const Parameter& theta,
                      OracleCounters* counters = nullptr);

StatVector sbar_i(const Model& model, const Dataset& data, std::size_t i,
                  const Parameter& theta, OracleCounters* counters = nullptr);

// Column j of the returned q x |B| matrix is sbar_{indices[j]}(theta).
Eigen::MatrixXd per_sample_stats(const Model& model, const Dataset& data,
                                 std::span<const std::size_t> indices, const Parameter& theta,
                                 OracleCounters* counters = nullptr);

// h(s) = sbar(T(s)) - s.
StatVector mean_field(const Model& model, const Dataset& data, const StatVector& s,
                      OracleCounters* counters = nullptr);

// F(theta) = (1/n) sum_i -log p(y_i; theta) + R(theta).
double penalized_nll(const Model& model, const Dataset& data, const Parameter& theta);

// W(s) = F(T(s)).
double objective(const Model& model, const Dataset& data, const StatVector& s,
                 OracleCounters* counters = nullptr);

}  // namespace vrem
