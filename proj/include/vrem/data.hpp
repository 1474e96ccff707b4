#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vrem/dataset.hpp"

namespace vrem {

// n x d matrix of observations with where-it-came-from metadata. Labels are
// kept for diagnostics only and never reach the algorithms.
struct RawDataset {
  RowMatrix values;
  std::vector<int> labels;
  std::string provenance;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

Dataset to_dataset(const RawDataset& raw);

RawDataset gen_scalar_mixture(std::size_t n, double w1, double w2, double m1, double m2,
                              double variance, std::uint64_t seed);

// g equal-weight components with identity covariance; means are independent
// uniform directions scaled to norm `separation`.
RawDataset gen_multivariate_mixture(std::size_t n, std::size_t g, std::size_t p,
                                    double separation, std::uint64_t seed);

// Image-like stand-in: a g-component mixture in a `latent`-dimensional space
// mapped linearly into d columns, with `zero_columns` randomly placed
// columns forced to 0.
RawDataset gen_image_like(std::size_t n, std::size_t d, std::size_t zero_columns,
                          std::size_t g, std::size_t latent, double separation,
                          std::uint64_t seed);

// Drops columns whose entries are all equal. Throws ArgumentError
// ("degenerate dataset") when every column is constant.
std::pair<RawDataset, std::vector<std::size_t>> remove_constant_features(const RawDataset& data);

struct PcaTransform {
  Eigen::VectorXd mean;           // d
  Eigen::MatrixXd components;     // d x d_pc, orthonormal columns
  Eigen::VectorXd explained;      // d_pc, non-increasing
};

PcaTransform pca_fit(const RawDataset& data, std::size_t d_pc);
RawDataset pca_apply(const PcaTransform& t, const RawDataset& data);

enum class DataFormat { kCsv, kPackedBinary };
DataFormat data_format_from_string(const std::string& text);
// ".emds" / ".bin" select packed binary, anything else CSV.
DataFormat data_format_from_path(const std::string& path);

// CSV: comma separated, '.' decimal, optional single header row.
// Packed binary: "EMDS", u64 n, u64 d, n*d f64 row-major, little-endian.
RawDataset load_dataset(const std::string& path, DataFormat format, bool has_header = false);
void save_dataset(const RawDataset& data, const std::string& path, DataFormat format);

}  // namespace vrem
