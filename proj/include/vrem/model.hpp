#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <memory>
#include <string>

#include "vrem/dataset.hpp"

namespace vrem {

class Parameter {
 public:
  virtual ~Parameter() = default;
};

using ParamPtr = std::shared_ptr<const Parameter>;

// Contract of a curved exponential family model in expectation space.
//
// Conditional expectations are evaluated over contiguous row blocks so the
// models can run their inner loops through the SIMD kernel table. Callers
// normally go through the free functions in em_core.hpp, which fix the
// summation order and maintain the oracle counters.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t stat_dim() const = 0;
  virtual std::size_t data_dim() const = 0;
  virtual std::string name() const = 0;

  // T(s). Throws DomainError when s is outside the admissible set.
  virtual ParamPtr m_step(const StatVector& s, const Dataset& data) const = 0;

  // Empty string when T(s) is defined, otherwise the violated constraint.
  virtual std::string domain_check(const StatVector& s, const Dataset& data) const = 0;

  // out[0..q) = sum over the `count` rows of sbar_i(theta). `out` is overwritten.
  virtual void block_stats(const Parameter& theta, const double* rows, std::size_t count,
                           double* out) const = 0;

  // Sum over the rows of -log p(y_i; theta).
  virtual double block_nll(const Parameter& theta, const double* rows,
                           std::size_t count) const = 0;

  virtual double regularizer(const Parameter&) const { return 0.0; }

  virtual bool has_natural_parameter() const { return false; }
  // phi(theta); models without it throw UnsupportedOperation.
  virtual Eigen::VectorXd natural_parameter(const Parameter& theta) const;
};

}  // namespace vrem
