#include "vrem/dataset.hpp"

#include <cmath>
#include <string>

#include "vrem/errors.hpp"

namespace vrem {

Dataset::Dataset(std::size_t n, std::size_t p, std::vector<double> values)
    : n_(n), p_(p), values_(std::move(values)) {
  if (n_ == 0 || p_ == 0) throw ArgumentError("dataset must have n >= 1 and p >= 1");
  if (values_.size() != n_ * p_)
    throw ArgumentError("dataset holds " + std::to_string(values_.size()) +
                        " values, expected n*p = " + std::to_string(n_ * p_));
  for (double v : values_)
    if (!std::isfinite(v)) throw ArgumentError("dataset contains a non-finite entry");

  Eigen::Map<const RowMatrix> y(values_.data(), static_cast<Eigen::Index>(n_),
                                static_cast<Eigen::Index>(p_));
  const double inv_n = 1.0 / static_cast<double>(n_);
  second_moment_ = (y.transpose() * y) * inv_n;
  second_moment_ = 0.5 * (second_moment_ + second_moment_.transpose()).eval();
  mean_ = y.colwise().sum().transpose() * inv_n;
}

Dataset::Dataset(const RowMatrix& rows)
    : Dataset(static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols()),
              std::vector<double>(rows.data(), rows.data() + rows.size())) {}

}  // namespace vrem
