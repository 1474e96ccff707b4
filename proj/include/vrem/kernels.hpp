#pragma once

// Data-parallel inner loops of the E-step and the likelihood.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is picked once at first use from the CPU features
// and the VREM_SIMD environment variable (scalar | avx2 | auto). Accumulating
// kernels use the same per-element operation order in both variants, so they
// agree bit for bit; kernels that call exp() agree to a few ulp.

#include <cstddef>
#include <string_view>

namespace vrem::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;

  // y[i] = exp(x[i]). In-place use (x == y) is allowed.
  void (*exp)(const double* x, double* y, std::size_t n);

  // z_i = L y_i for each of `rows` row-major p-vectors; L is p x p lower
  // triangular, row-major.
  void (*lower_matvec_rows)(const double* lower, const double* y, std::size_t rows,
                            std::size_t p, double* z);

  // out[i*g + l] = || z_i - c_l ||^2.
  void (*sq_dist)(const double* z, std::size_t rows, std::size_t p, const double* centers,
                  std::size_t g, double* out);

  // Row-wise softmax of a rows x g block, in place. log_norm[i] receives the
  // log-sum-exp of row i before normalisation.
  void (*softmax_rows)(double* logits, std::size_t rows, std::size_t g, double* log_norm);

  // mass[l] += sum_i r[i,l];  moment[l,:] += sum_i r[i,l] * y[i,:]
  // Rows are folded in ascending order.
  void (*accumulate_weighted)(const double* r, const double* y, std::size_t rows,
                              std::size_t g, std::size_t p, double* mass, double* moment);

  // Posterior of a two-component mixture whose log-odds are affine in y:
  // d = slope * y + intercept, r1 = sigmoid(d), r2 = sigmoid(-d).
  void (*two_component_posterior)(const double* y, std::size_t n, double slope,
                                  double intercept, double* r1, double* r2);

  // out[0..3] = (sum r1, sum r2, sum r1*y, sum r2*y) with four interleaved
  // lanes (row i goes to lane i % 4) combined as (l0 + l1) + (l2 + l3).
  void (*two_component_moments)(const double* y, const double* r1, const double* r2,
                                std::size_t n, double* out);
};

const KernelTable& scalar_table();
// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_table();

const KernelTable& active();
// Overrides the active table for the whole process; returns false if the
// requested backend is unavailable.
bool select(Backend backend);
std::string_view backend_name(Backend backend);

}  // namespace vrem::kernels
