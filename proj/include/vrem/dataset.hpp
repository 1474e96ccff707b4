#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace vrem {

using StatVector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Read-only collection of n observations in R^p, stored row-major.
///
/// The second moment (1/n) sum_i y_i y_i^T is computed once at construction;
/// the pooled-covariance M-step consumes it on every call.
class Dataset {
 public:
  Dataset(std::size_t n, std::size_t p, std::vector<double> values);
  explicit Dataset(const RowMatrix& rows);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return p_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * p_, p_};
  }
  const double* data() const noexcept { return values_.data(); }
  std::span<const double> values() const noexcept { return values_; }

  const Eigen::MatrixXd& second_moment() const noexcept { return second_moment_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<double> values_;
  Eigen::MatrixXd second_moment_;
  Eigen::VectorXd mean_;
};

}  // namespace vrem
