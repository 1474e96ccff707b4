#include "vrem/init.hpp"

#include <random>
#include <vector>

#include "vrem/errors.hpp"

namespace vrem {

InitMethod init_method_from_string(const std::string& text) {
  if (text == "random-responsibility") return InitMethod::kRandomResponsibility;
  if (text == "kmeans-seed") return InitMethod::kKmeansSeed;
  throw ArgumentError("unknown init method '" + text + "'");
}

const char* to_string(InitMethod method) {
  return method == InitMethod::kRandomResponsibility ? "random-responsibility" : "kmeans-seed";
}

namespace {

GmmParameter random_responsibility(const Dataset& data, std::size_t g, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  std::exponential_distribution<double> expo(1.0);
  StatVector s = StatVector::Zero(static_cast<Eigen::Index>(g + g * p));
  std::vector<double> rho(g);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (auto& r : rho) total += (r = expo(rng));
    const auto y = data.row(i);
    for (std::size_t l = 0; l < g; ++l) {
      const double w = rho[l] / total;
      s[static_cast<Eigen::Index>(l)] += w;
      for (std::size_t j = 0; j < p; ++j) s[static_cast<Eigen::Index>(g + l * p + j)] += w * y[j];
    }
  }
  s /= static_cast<double>(n);
  return gmm_m_step(s, data.second_moment(), g, p);
}

GmmParameter kmeans_seed(const Dataset& data, std::size_t g, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  if (g > n) throw ArgumentError("more components than observations");
  RowMatrix means(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  for (std::size_t l = 0; l < g; ++l) {
    const auto c = data.row(pick);
    for (std::size_t j = 0; j < p; ++j) means(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = c[j];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = data.row(i);
      double d = 0.0;
      for (std::size_t j = 0; j < p; ++j) d += (y[j] - c[j]) * (y[j] - c[j]);
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    if (l + 1 == g) break;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> next(d2.begin(), d2.end());
      pick = next(rng);
    } else {
      pick = first(rng);
    }
  }
  const Eigen::MatrixXd cov = data.second_moment() - data.mean() * data.mean().transpose();
  return GmmParameter::make(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g), 1.0 / static_cast<double>(g)),
                            std::move(means), cov);
}

}  // namespace

GmmParameter gmm_init(const Dataset& data, std::size_t g, InitMethod method,
                      std::uint64_t seed) {
  if (g == 0) throw ArgumentError("g must be >= 1");
  std::mt19937_64 rng(seed);
  return method == InitMethod::kRandomResponsibility ? random_responsibility(data, g, rng)
                                                     : kmeans_seed(data, g, rng);
}

}  // namespace vrem
