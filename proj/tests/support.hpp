#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "vrem/data.hpp"
#include "vrem/dataset.hpp"
#include "vrem/errors.hpp"
#include "vrem/gmm.hpp"
#include "vrem/model.hpp"

namespace testing {

using vrem::Dataset;
using vrem::RowMatrix;
using vrem::StatVector;

inline Dataset scalar_dataset(const std::vector<double>& ys) {
  return Dataset(ys.size(), 1, ys);
}

inline Dataset mixture_dataset(std::size_t n, std::size_t g, std::size_t p, double sep,
                               std::uint64_t seed) {
  return Dataset(vrem::gen_multivariate_mixture(n, g, p, sep, seed).values);
}

inline double normal_pdf(double y, double mu, double var = 1.0) {
  return std::exp(-0.5 * (y - mu) * (y - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Multivariate normal density from an explicit inverse and determinant.
inline double mvn_pdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd d = y - mu;
  const double quad = d.dot(cov.inverse() * d);
  const double p = static_cast<double>(y.size());
  return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * std::numbers::pi, p) * cov.determinant());
}

// Posterior by direct density ratios.
inline Eigen::VectorXd naive_posterior(const vrem::GmmParameter& th, const Eigen::VectorXd& y) {
  const auto g = th.weights.size();
  Eigen::VectorXd r(g);
  for (Eigen::Index l = 0; l < g; ++l)
    r[l] = th.weights[l] * mvn_pdf(y, th.means.row(l).transpose(), th.covariance);
  return r / r.sum();
}

inline StatVector naive_gmm_stats(const vrem::GmmParameter& th, const Dataset& data) {
  const auto g = static_cast<Eigen::Index>(th.components());
  const auto p = static_cast<Eigen::Index>(data.dim());
  StatVector s = StatVector::Zero(g + g * p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(row.data(), p);
    const Eigen::VectorXd r = naive_posterior(th, y);
    for (Eigen::Index l = 0; l < g; ++l) {
      s[l] += r[l];
      s.segment(g + l * p, p) += r[l] * y;
    }
  }
  return s / static_cast<double>(data.size());
}

inline double naive_gmm_nll(const vrem::GmmParameter& th, const Dataset& data) {
  const auto p = static_cast<Eigen::Index>(data.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(row.data(), p);
    double like = 0.0;
    for (Eigen::Index l = 0; l < th.weights.size(); ++l)
      like += th.weights[l] * mvn_pdf(y, th.means.row(l).transpose(), th.covariance);
    total -= std::log(like);
  }
  return total / static_cast<double>(data.size());
}

// Textbook EM iteration for a pooled-covariance mixture, written directly
// in parameter space.
inline vrem::GmmParameter textbook_em_step(const vrem::GmmParameter& th, const Dataset& data) {
  const auto g = th.weights.size();
  const auto p = static_cast<Eigen::Index>(data.dim());
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd nk = Eigen::VectorXd::Zero(g);
  RowMatrix sums = RowMatrix::Zero(g, p);
  std::vector<Eigen::VectorXd> post;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(row.data(), p);
    post.push_back(naive_posterior(th, y));
    nk += post.back();
    for (Eigen::Index l = 0; l < g; ++l) sums.row(l) += post.back()[l] * y.transpose();
  }
  RowMatrix mu(g, p);
  for (Eigen::Index l = 0; l < g; ++l) mu.row(l) = sums.row(l) / nk[l];
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(row.data(), p);
    for (Eigen::Index l = 0; l < g; ++l) {
      const Eigen::VectorXd d = y - mu.row(l).transpose();
      cov += post[i][l] * d * d.transpose();
    }
  }
  return vrem::GmmParameter::make(nk / n, mu, cov / n);
}

// Location model: sbar_i = y_i, T(s) = s, F(theta) = mean_i exp(theta - y_i).
// W is smooth, non-quadratic and known in closed form.
struct LocationParameter final : vrem::Parameter {
  double theta = 0.0;
};

class ExpLocationModel final : public vrem::Model {
 public:
  std::size_t stat_dim() const override { return 1; }
  std::size_t data_dim() const override { return 1; }
  std::string name() const override { return "exp-location"; }
  vrem::ParamPtr m_step(const StatVector& s, const Dataset&) const override {
    auto th = std::make_shared<LocationParameter>();
    th->theta = s[0];
    return th;
  }
  std::string domain_check(const StatVector&, const Dataset&) const override { return {}; }
  void block_stats(const vrem::Parameter&, const double* rows, std::size_t count,
                   double* out) const override {
    out[0] = 0.0;
    for (std::size_t i = 0; i < count; ++i) out[0] += rows[i];
  }
  double block_nll(const vrem::Parameter& theta, const double* rows,
                   std::size_t count) const override {
    const double t = static_cast<const LocationParameter&>(theta).theta;
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) total += std::exp(t - rows[i]);
    return total;
  }
};

// Same as above with F(theta) = mean_i (theta - y_i)^2 / 2.
class QuadLocationModel final : public vrem::Model {
 public:
  std::size_t stat_dim() const override { return 1; }
  std::size_t data_dim() const override { return 1; }
  std::string name() const override { return "quad-location"; }
  vrem::ParamPtr m_step(const StatVector& s, const Dataset&) const override {
    auto th = std::make_shared<LocationParameter>();
    th->theta = s[0];
    return th;
  }
  std::string domain_check(const StatVector&, const Dataset&) const override { return {}; }
  void block_stats(const vrem::Parameter&, const double* rows, std::size_t count,
                   double* out) const override {
    out[0] = 0.0;
    for (std::size_t i = 0; i < count; ++i) out[0] += rows[i];
  }
  double block_nll(const vrem::Parameter& theta, const double* rows,
                   std::size_t count) const override {
    const double t = static_cast<const LocationParameter&>(theta).theta;
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) total += 0.5 * (t - rows[i]) * (t - rows[i]);
    return total;
  }
};

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
