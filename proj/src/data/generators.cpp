#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "vrem/data.hpp"
#include "vrem/errors.hpp"

namespace vrem {
namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Directions uniform on the sphere, scaled to `radius`.
RowMatrix sphere_points(std::size_t count, std::size_t dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RowMatrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  for (Eigen::Index l = 0; l < out.rows(); ++l) {
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(l, j) = gauss(rng);
      norm = out.row(l).norm();
    } while (norm == 0.0);
    out.row(l) *= radius / norm;
  }
  return out;
}

}  // namespace

Dataset to_dataset(const RawDataset& raw) { return Dataset(raw.values); }

RawDataset gen_scalar_mixture(std::size_t n, double w1, double w2, double m1, double m2,
                              double variance, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("n must be >= 1");
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw ArgumentError("mixture weights must be non-negative and sum to 1");
  if (!(variance > 0.0)) throw ArgumentError("variance must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd = std::sqrt(variance);
  RawDataset out;
  out.values.resize(static_cast<Eigen::Index>(n), 1);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = unif(rng) < w1 ? 0 : 1;
    out.labels[i] = z;
    out.values(static_cast<Eigen::Index>(i), 0) = (z == 0 ? m1 : m2) + sd * gauss(rng);
  }
  out.provenance = "scalar-mixture n=" + std::to_string(n) + " w=(" + fmt_g(w1) + "," +
                   fmt_g(w2) + ") m=(" + fmt_g(m1) + "," + fmt_g(m2) + ") var=" +
                   fmt_g(variance) + " seed=" + std::to_string(seed);
  return out;
}

RawDataset gen_multivariate_mixture(std::size_t n, std::size_t g, std::size_t p,
                                    double separation, std::uint64_t seed) {
  if (n == 0 || g == 0 || p == 0) throw ArgumentError("n, g and p must be >= 1");
  if (!(separation >= 0.0)) throw ArgumentError("separation must be >= 0");
  std::mt19937_64 rng(seed);
  const RowMatrix means = sphere_points(g, p, separation, rng);
  std::uniform_int_distribution<int> comp(0, static_cast<int>(g) - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RawDataset out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = comp(rng);
    out.labels[i] = z;
    for (std::size_t j = 0; j < p; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          means(z, static_cast<Eigen::Index>(j)) + gauss(rng);
  }
  out.provenance = "multivariate-mixture n=" + std::to_string(n) + " g=" + std::to_string(g) +
                   " p=" + std::to_string(p) + " separation=" + fmt_g(separation) +
                   " seed=" + std::to_string(seed);
  return out;
}

RawDataset gen_image_like(std::size_t n, std::size_t d, std::size_t zero_columns,
                          std::size_t g, std::size_t latent, double separation,
                          std::uint64_t seed) {
  if (zero_columns >= d) throw ArgumentError("zero_columns must be < d");
  if (latent == 0 || latent > d - zero_columns)
    throw ArgumentError("latent dimension must lie in [1, d - zero_columns]");
  RawDataset base = gen_multivariate_mixture(n, g, latent, separation, seed);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = j;
  std::shuffle(cols.begin(), cols.end(), rng);
  std::vector<bool> zero(d, false);
  for (std::size_t j = 0; j < zero_columns; ++j) zero[cols[j]] = true;

  const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
  Eigen::MatrixXd mix(static_cast<Eigen::Index>(latent), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < mix.rows(); ++r)
    for (Eigen::Index c = 0; c < mix.cols(); ++c) mix(r, c) = scale * gauss(rng);

  RawDataset out;
  out.values = base.values * mix;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double& v = out.values(i, static_cast<Eigen::Index>(j));
      v = zero[j] ? 0.0 : v + 0.1 * gauss(rng);
    }
  out.labels = std::move(base.labels);
  out.provenance = "image-like n=" + std::to_string(n) + " d=" + std::to_string(d) +
                   " zero=" + std::to_string(zero_columns) + " g=" + std::to_string(g) +
                   " latent=" + std::to_string(latent) + " separation=" + fmt_g(separation) +
                   " seed=" + std::to_string(seed);
  return out;
}

}  // namespace vrem
