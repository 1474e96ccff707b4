#include "vrem/gmm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <vector>

#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/kernels.hpp"

namespace vrem {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

struct Scratch {
  std::vector<double> z;
  std::vector<double> logits;
  std::vector<double> log_norm;
};

Scratch& scratch(std::size_t rows, std::size_t g, std::size_t p) {
  thread_local Scratch s;
  if (s.z.size() < rows * p) s.z.resize(rows * p);
  if (s.logits.size() < rows * g) s.logits.resize(rows * g);
  if (s.log_norm.size() < rows) s.log_norm.resize(rows);
  return s;
}

// Fills sc.logits with the normalised responsibilities and sc.log_norm with
// log sum_l alpha_l exp(-d_il / 2).
void responsibilities(const GmmParameter& th, const double* rows, std::size_t count,
                      Scratch& sc) {
  const std::size_t g = th.components();
  const std::size_t p = th.dim();
  const auto& k = kernels::active();
  k.lower_matvec_rows(th.whiten.data(), rows, count, p, sc.z.data());
  k.sq_dist(sc.z.data(), count, p, th.white_means.data(), g, sc.logits.data());
  for (std::size_t i = 0; i < count; ++i) {
    double* row = sc.logits.data() + i * g;
    for (std::size_t l = 0; l < g; ++l) row[l] = th.log_weights[l] - 0.5 * row[l];
  }
  k.softmax_rows(sc.logits.data(), count, g, sc.log_norm.data());
}

const GmmParameter& as_gmm(const Parameter& theta) {
  const auto* th = dynamic_cast<const GmmParameter*>(&theta);
  if (th == nullptr) throw ArgumentError("parameter is not a GmmParameter");
  return *th;
}

// Sigma implied by s, or an explanation of why T(s) is undefined.
std::string implied_covariance(const StatVector& s, const Eigen::MatrixXd& m2, std::size_t g,
                               std::size_t p, Eigen::MatrixXd* cov) {
  if (static_cast<std::size_t>(s.size()) != g + g * p)
    throw ArgumentError("statistic has length " + std::to_string(s.size()) + ", expected " +
                        std::to_string(g + g * p));
  if (!s.allFinite()) return "non-finite statistic";
  for (std::size_t l = 0; l < g; ++l)
    if (!(s[static_cast<Eigen::Index>(l)] > kEmptyComponentMass))
      return "empty component";
  Eigen::MatrixXd c = m2;
  for (std::size_t l = 0; l < g; ++l) {
    const double sl = s[static_cast<Eigen::Index>(l)];
    const Eigen::VectorXd mu =
        s.segment(static_cast<Eigen::Index>(g + l * p), static_cast<Eigen::Index>(p)) / sl;
    c.noalias() -= sl * mu * mu.transpose();
  }
  *cov = 0.5 * (c + c.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(*cov);
  if (llt.info() != Eigen::Success) return "degenerate covariance";
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) return "degenerate covariance";
  return {};
}

}  // namespace

GmmParameter GmmParameter::make(Eigen::VectorXd weights, RowMatrix means,
                                Eigen::MatrixXd covariance) {
  const auto g = weights.size();
  const auto p = means.cols();
  if (g < 1 || means.rows() != g || covariance.rows() != p || covariance.cols() != p)
    throw ArgumentError("inconsistent GMM parameter shapes");
  GmmParameter th;
  th.weights = std::move(weights);
  th.means = std::move(means);
  th.covariance = 0.5 * (covariance + covariance.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(th.covariance);
  if (llt.info() != Eigen::Success) throw DomainError("degenerate covariance", "Cholesky failed");
  th.chol = llt.matrixL();
  if (!(th.chol.diagonal().array() > 0.0).all() || !th.chol.allFinite())
    throw DomainError("degenerate covariance", "non-positive Cholesky pivot");

  const Eigen::MatrixXd inv_l =
      th.chol.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  th.whiten = inv_l.triangularView<Eigen::Lower>();
  th.precision = inv_l.transpose() * inv_l;
  th.log_det_precision = -2.0 * th.chol.diagonal().array().log().sum();
  th.white_means = th.means * inv_l.transpose();
  th.log_weights = th.weights.array().log();
  return th;
}

bool GmmParameter::valid(double tol) const {
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > tol) return false;
  if (!means.allFinite()) return false;
  const double scale = covariance.norm();
  if ((covariance - covariance.transpose()).norm() > tol * scale) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  return llt.info() == Eigen::Success;
}

GmmModel::GmmModel(std::size_t g, std::size_t p, bool include_log_2pi)
    : g_(g), p_(p), include_log_2pi_(include_log_2pi) {
  if (g_ == 0 || p_ == 0) throw ArgumentError("GMM needs g >= 1 and p >= 1");
}

ParamPtr GmmModel::m_step(const StatVector& s, const Dataset& data) const {
  return std::make_shared<const GmmParameter>(gmm_m_step(s, data.second_moment(), g_, p_));
}

std::string GmmModel::domain_check(const StatVector& s, const Dataset& data) const {
  return gmm_domain_check(s, data.second_moment(), g_, p_);
}

void GmmModel::block_stats(const Parameter& theta, const double* rows, std::size_t count,
                           double* out) const {
  const GmmParameter& th = as_gmm(theta);
  Scratch& sc = scratch(count, g_, p_);
  responsibilities(th, rows, count, sc);
  std::fill_n(out, stat_dim(), 0.0);
  kernels::active().accumulate_weighted(sc.logits.data(), rows, count, g_, p_, out, out + g_);
}

double GmmModel::block_nll(const Parameter& theta, const double* rows,
                           std::size_t count) const {
  const GmmParameter& th = as_gmm(theta);
  Scratch& sc = scratch(count, g_, p_);
  responsibilities(th, rows, count, sc);
  const double per_row = -0.5 * th.log_det_precision +
                         (include_log_2pi_ ? static_cast<double>(p_) * kHalfLog2Pi : 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += per_row - sc.log_norm[i];
  return total;
}

Eigen::VectorXd GmmModel::natural_parameter(const Parameter& theta) const {
  return gmm_phi(as_gmm(theta));
}

Eigen::VectorXd gmm_posterior(const GmmParameter& theta, std::span<const double> y) {
  const std::size_t g = theta.components();
  if (y.size() != theta.dim()) throw ArgumentError("observation has the wrong dimension");
  Scratch& sc = scratch(1, g, theta.dim());
  responsibilities(theta, y.data(), 1, sc);
  return Eigen::Map<const Eigen::VectorXd>(sc.logits.data(), static_cast<Eigen::Index>(g));
}

GmmParameter gmm_m_step(const StatVector& s, const Eigen::MatrixXd& second_moment,
                        std::size_t g, std::size_t p) {
  Eigen::MatrixXd cov;
  const std::string why = implied_covariance(s, second_moment, g, p, &cov);
  if (!why.empty()) throw DomainError(why, "M-step undefined at this statistic");

  const Eigen::VectorXd mass = s.head(static_cast<Eigen::Index>(g));
  RowMatrix means(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p));
  for (std::size_t l = 0; l < g; ++l)
    means.row(static_cast<Eigen::Index>(l)) =
        s.segment(static_cast<Eigen::Index>(g + l * p), static_cast<Eigen::Index>(p)).transpose() /
        mass[static_cast<Eigen::Index>(l)];
  return GmmParameter::make(mass / mass.sum(), std::move(means), std::move(cov));
}

std::string gmm_domain_check(const StatVector& s, const Eigen::MatrixXd& second_moment,
                             std::size_t g, std::size_t p) {
  Eigen::MatrixXd cov;
  return implied_covariance(s, second_moment, g, p, &cov);
}

double gmm_nll(const GmmParameter& theta, const Dataset& data, bool include_log_2pi) {
  const GmmModel model(theta.components(), theta.dim(), include_log_2pi);
  return penalized_nll(model, data, theta);
}

Eigen::VectorXd gmm_phi(const GmmParameter& theta) {
  const auto g = static_cast<Eigen::Index>(theta.components());
  const auto p = static_cast<Eigen::Index>(theta.dim());
  Eigen::VectorXd phi(g + g * p);
  for (Eigen::Index l = 0; l < g; ++l) {
    if (!(theta.weights[l] > 0.0)) throw DomainError("empty component", "log of a zero weight");
    const Eigen::VectorXd mu = theta.means.row(l).transpose();
    const Eigen::VectorXd gmu = theta.precision * mu;
    phi[l] = std::log(theta.weights[l]) - 0.5 * mu.dot(gmu);
    phi.segment(g + l * p, p) = gmu;
  }
  return phi;
}

double gmm_psi(const GmmParameter& theta, const Eigen::MatrixXd& second_moment) {
  const double p = static_cast<double>(theta.dim());
  return p * kHalfLog2Pi + 0.5 * (theta.precision * second_moment).trace() -
         0.5 * theta.log_det_precision;
}

}  // namespace vrem
