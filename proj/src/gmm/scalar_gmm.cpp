#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vrem/errors.hpp"
#include "vrem/gmm.hpp"
#include "vrem/kernels.hpp"

namespace vrem {
namespace {

const ScalarTwoGmmParameter& as_scalar2(const Parameter& theta) {
  const auto* th = dynamic_cast<const ScalarTwoGmmParameter*>(&theta);
  if (th == nullptr) throw ArgumentError("parameter is not a ScalarTwoGmmParameter");
  return *th;
}

std::string scalar2_violation(const StatVector& s) {
  if (s.size() != 4) throw ArgumentError("scalar2 statistic must have length 4");
  if (!s.allFinite()) return "non-finite statistic";
  if (!(s[0] > kEmptyComponentMass) || !(s[1] > kEmptyComponentMass)) return "empty component";
  return {};
}

}  // namespace

ScalarTwoGmmParameter scalar2_m_step(const StatVector& s) {
  const std::string why = scalar2_violation(s);
  if (!why.empty()) throw DomainError(why, "M-step undefined at this statistic");
  ScalarTwoGmmParameter th;
  th.mu1 = s[2] / s[0];
  th.mu2 = s[3] / s[1];
  return th;
}

ScalarTwoGmmModel::ScalarTwoGmmModel(double weight1, bool include_log_2pi)
    : w1_(weight1), include_log_2pi_(include_log_2pi) {
  if (!(w1_ > 0.0 && w1_ < 1.0)) throw ArgumentError("scalar2 weight must lie in (0, 1)");
}

ParamPtr ScalarTwoGmmModel::m_step(const StatVector& s, const Dataset&) const {
  return std::make_shared<const ScalarTwoGmmParameter>(scalar2_m_step(s));
}

std::string ScalarTwoGmmModel::domain_check(const StatVector& s, const Dataset&) const {
  return scalar2_violation(s);
}

void ScalarTwoGmmModel::block_stats(const Parameter& theta, const double* rows,
                                    std::size_t count, double* out) const {
  const auto& th = as_scalar2(theta);
  thread_local std::vector<double> r1, r2;
  if (r1.size() < count) {
    r1.resize(count);
    r2.resize(count);
  }
  // log-odds of component 1 are affine in y
  const double slope = th.mu1 - th.mu2;
  const double intercept =
      std::log(w1_ / (1.0 - w1_)) - 0.5 * (th.mu1 * th.mu1 - th.mu2 * th.mu2);
  const auto& k = kernels::active();
  k.two_component_posterior(rows, count, slope, intercept, r1.data(), r2.data());
  k.two_component_moments(rows, r1.data(), r2.data(), count, out);
}

double ScalarTwoGmmModel::block_nll(const Parameter& theta, const double* rows,
                                    std::size_t count) const {
  const auto& th = as_scalar2(theta);
  const double lw1 = std::log(w1_);
  const double lw2 = std::log(1.0 - w1_);
  const double c = include_log_2pi_ ? 0.5 * std::log(2.0 * std::numbers::pi) : 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = rows[i];
    const double a1 = lw1 - 0.5 * (y - th.mu1) * (y - th.mu1);
    const double a2 = lw2 - 0.5 * (y - th.mu2) * (y - th.mu2);
    const double m = std::max(a1, a2);
    total += c - (m + std::log1p(std::exp(std::min(a1, a2) - m)));
  }
  return total;
}

Eigen::VectorXd ScalarTwoGmmModel::natural_parameter(const Parameter& theta) const {
  const auto& th = as_scalar2(theta);
  Eigen::VectorXd phi(4);
  phi << std::log(w1_) - 0.5 * th.mu1 * th.mu1, std::log(1.0 - w1_) - 0.5 * th.mu2 * th.mu2,
      th.mu1, th.mu2;
  return phi;
}

std::pair<double, double> ScalarTwoGmmModel::posterior(const ScalarTwoGmmParameter& theta,
                                                       double y) const {
  double out[4];
  block_stats(theta, &y, 1, out);
  return {out[0], out[1]};
}

}  // namespace vrem
