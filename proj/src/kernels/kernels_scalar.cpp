#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace vrem::kernels::detail {

void exp_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void lower_matvec_rows_scalar(const double* lower, const double* y, std::size_t rows,
                              std::size_t p, double* z) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* yi = y + i * p;
    double* zi = z + i * p;
    for (std::size_t r = 0; r < p; ++r) {
      const double* lr = lower + r * p;
      double acc = 0.0;
      for (std::size_t c = 0; c <= r; ++c) acc += lr[c] * yi[c];
      zi[r] = acc;
    }
  }
}

void sq_dist_scalar(const double* z, std::size_t rows, std::size_t p, const double* centers,
                    std::size_t g, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* zi = z + i * p;
    for (std::size_t l = 0; l < g; ++l) {
      const double* cl = centers + l * p;
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double d = zi[j] - cl[j];
        acc += d * d;
      }
      out[i * g + l] = acc;
    }
  }
}

void softmax_rows_with(double* logits, std::size_t rows, std::size_t g, double* log_norm,
                       void (*vexp)(const double*, double*, std::size_t)) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = logits + i * g;
    const double m = *std::max_element(row, row + g);
    for (std::size_t l = 0; l < g; ++l) row[l] -= m;
    log_norm[i] = m;
  }
  vexp(logits, logits, rows * g);
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = logits + i * g;
    double total = 0.0;
    for (std::size_t l = 0; l < g; ++l) total += row[l];
    const double inv = 1.0 / total;
    for (std::size_t l = 0; l < g; ++l) row[l] *= inv;
    log_norm[i] += std::log(total);
  }
}

void softmax_rows_scalar(double* logits, std::size_t rows, std::size_t g, double* log_norm) {
  softmax_rows_with(logits, rows, g, log_norm, &exp_scalar);
}

void accumulate_weighted_scalar(const double* r, const double* y, std::size_t rows,
                                std::size_t g, std::size_t p, double* mass, double* moment) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* ri = r + i * g;
    const double* yi = y + i * p;
    for (std::size_t l = 0; l < g; ++l) {
      mass[l] += ri[l];
      double* ml = moment + l * p;
      for (std::size_t j = 0; j < p; ++j) ml[j] += ri[l] * yi[j];
    }
  }
}

void two_component_posterior_scalar(const double* y, std::size_t n, double slope,
                                    double intercept, double* r1, double* r2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = slope * y[i] + intercept;
    const double e = std::exp(-std::fabs(d));
    const double big = 1.0 / (1.0 + e);
    const double small = e * big;
    r1[i] = d >= 0.0 ? big : small;
    r2[i] = d >= 0.0 ? small : big;
  }
}

void two_component_moments_scalar(const double* y, const double* r1, const double* r2,
                                  std::size_t n, double* out) {
  double m1[4] = {0, 0, 0, 0}, m2[4] = {0, 0, 0, 0};
  double w1[4] = {0, 0, 0, 0}, w2[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lane = i & 3u;
    m1[lane] += r1[i];
    m2[lane] += r2[i];
    w1[lane] += r1[i] * y[i];
    w2[lane] += r2[i] * y[i];
  }
  out[0] = (m1[0] + m1[1]) + (m1[2] + m1[3]);
  out[1] = (m2[0] + m2[1]) + (m2[2] + m2[3]);
  out[2] = (w1[0] + w1[1]) + (w1[2] + w1[3]);
  out[3] = (w2[0] + w2[1]) + (w2[2] + w2[3]);
}

}  // namespace vrem::kernels::detail
