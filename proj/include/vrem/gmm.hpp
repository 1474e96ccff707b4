#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>

#include "vrem/dataset.hpp"
#include "vrem/model.hpp"

namespace vrem {

// Components below this mass make the M-step undefined.
inline constexpr double kEmptyComponentMass = 1e-12;

// Weights, means and a pooled full covariance. Build through make(), which
// factors the covariance and fails with DomainError when it is not PD.
struct GmmParameter final : Parameter {
  Eigen::VectorXd weights;     // g
  RowMatrix means;             // g x p
  Eigen::MatrixXd covariance;  // Sigma
  Eigen::MatrixXd chol;        // lower L, Sigma = L L^T
  Eigen::MatrixXd precision;   // Gamma = Sigma^{-1}
  double log_det_precision = 0.0;

  // E-step helpers: W = L^{-1} (row-major lower), whitened means W mu_l and
  // log weights.
  RowMatrix whiten;
  RowMatrix white_means;
  Eigen::VectorXd log_weights;

  std::size_t components() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }

  static GmmParameter make(Eigen::VectorXd weights, RowMatrix means, Eigen::MatrixXd covariance);

  // Membership in Theta: weights on the simplex, covariance symmetric PD.
  bool valid(double tol = 1e-12) const;
};

class GmmModel final : public Model {
 public:
  GmmModel(std::size_t g, std::size_t p, bool include_log_2pi = true);

  std::size_t stat_dim() const override { return g_ + g_ * p_; }
  std::size_t data_dim() const override { return p_; }
  std::size_t components() const { return g_; }
  std::string name() const override { return "gmm"; }

  ParamPtr m_step(const StatVector& s, const Dataset& data) const override;
  std::string domain_check(const StatVector& s, const Dataset& data) const override;
  void block_stats(const Parameter& theta, const double* rows, std::size_t count,
                   double* out) const override;
  double block_nll(const Parameter& theta, const double* rows, std::size_t count) const override;
  bool has_natural_parameter() const override { return true; }
  Eigen::VectorXd natural_parameter(const Parameter& theta) const override;

 private:
  std::size_t g_;
  std::size_t p_;
  bool include_log_2pi_;
};

// p(z = l | y; theta), log-sum-exp stabilised.
Eigen::VectorXd gmm_posterior(const GmmParameter& theta, std::span<const double> y);

// T(s) with the data second moment passed explicitly.
GmmParameter gmm_m_step(const StatVector& s, const Eigen::MatrixXd& second_moment,
                        std::size_t g, std::size_t p);

// Empty when admissible, otherwise "empty component" or "degenerate covariance".
std::string gmm_domain_check(const StatVector& s, const Eigen::MatrixXd& second_moment,
                             std::size_t g, std::size_t p);

// (1/n) sum_i -log sum_l alpha_l N(y_i; mu_l, Sigma).
double gmm_nll(const GmmParameter& theta, const Dataset& data, bool include_log_2pi = true);

// phi(theta) = ((log alpha_l - mu_l^T Gamma mu_l / 2)_l, (Gamma mu_l)_l).
Eigen::VectorXd gmm_phi(const GmmParameter& theta);

// psi(theta) = (p/2) log 2 pi + tr(Gamma M2) / 2 - log det Gamma / 2.
double gmm_psi(const GmmParameter& theta, const Eigen::MatrixXd& second_moment);

// Two-component scalar mixture with known weights and unit variances; only
// the means are fitted. Statistic layout (mass_1, mass_2, sum_1, sum_2) / n.
struct ScalarTwoGmmParameter final : Parameter {
  double mu1 = 0.0;
  double mu2 = 0.0;
};

class ScalarTwoGmmModel final : public Model {
 public:
  explicit ScalarTwoGmmModel(double weight1 = 0.2, bool include_log_2pi = true);

  std::size_t stat_dim() const override { return 4; }
  std::size_t data_dim() const override { return 1; }
  std::string name() const override { return "scalar2"; }
  double weight1() const { return w1_; }
  double weight2() const { return 1.0 - w1_; }

  ParamPtr m_step(const StatVector& s, const Dataset& data) const override;
  std::string domain_check(const StatVector& s, const Dataset& data) const override;
  void block_stats(const Parameter& theta, const double* rows, std::size_t count,
                   double* out) const override;
  double block_nll(const Parameter& theta, const double* rows, std::size_t count) const override;
  bool has_natural_parameter() const override { return true; }
  Eigen::VectorXd natural_parameter(const Parameter& theta) const override;

  // (r1, r2) at a single observation.
  std::pair<double, double> posterior(const ScalarTwoGmmParameter& theta, double y) const;

 private:
  double w1_;
  bool include_log_2pi_;
};

ScalarTwoGmmParameter scalar2_m_step(const StatVector& s);

}  // namespace vrem
