#include "vrem/finite_diff.hpp"

#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"

namespace vrem {

Eigen::VectorXd fd_gradient_objective(const Model& model, const Dataset& data,
                                      const StatVector& s, double step) {
  if (!(step > 0.0)) throw ArgumentError("finite-difference step must be positive");
  Eigen::VectorXd grad(s.size());
  StatVector x = s;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    x[j] = s[j] + step;
    const double up = objective(model, data, x);
    x[j] = s[j] - step;
    const double down = objective(model, data, x);
    x[j] = s[j];
    grad[j] = (up - down) / (2.0 * step);
  }
  return grad;
}

JacobianEstimate fd_jacobian_phiT(const Model& model, const Dataset& data, const StatVector& s,
                                  double step) {
  if (!model.has_natural_parameter())
    throw UnsupportedOperation(model.name() + " does not expose its natural parameter");
  if (!(step > 0.0)) throw ArgumentError("finite-difference step must be positive");
  const Eigen::Index q = s.size();
  JacobianEstimate est;
  est.raw.resize(q, q);
  StatVector x = s;
  for (Eigen::Index j = 0; j < q; ++j) {
    x[j] = s[j] + step;
    const Eigen::VectorXd up = model.natural_parameter(*model.m_step(x, data));
    x[j] = s[j] - step;
    const Eigen::VectorXd down = model.natural_parameter(*model.m_step(x, data));
    x[j] = s[j];
    est.raw.col(j) = (up - down) / (2.0 * step);
  }
  est.symmetric = 0.5 * (est.raw + est.raw.transpose());
  const double norm = est.raw.norm();
  est.asymmetry = norm > 0.0 ? (est.raw - est.raw.transpose()).norm() / norm : 0.0;
  return est;
}

}  // namespace vrem
