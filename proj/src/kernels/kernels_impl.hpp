#pragma once

#include <cstddef>

namespace vrem::kernels::detail {

void exp_scalar(const double* x, double* y, std::size_t n);
void lower_matvec_rows_scalar(const double* lower, const double* y, std::size_t rows,
                              std::size_t p, double* z);
void sq_dist_scalar(const double* z, std::size_t rows, std::size_t p, const double* centers,
                    std::size_t g, double* out);
void softmax_rows_scalar(double* logits, std::size_t rows, std::size_t g, double* log_norm);
void softmax_rows_with(double* logits, std::size_t rows, std::size_t g, double* log_norm,
                       void (*vexp)(const double*, double*, std::size_t));
void accumulate_weighted_scalar(const double* r, const double* y, std::size_t rows,
                                std::size_t g, std::size_t p, double* mass, double* moment);
void two_component_posterior_scalar(const double* y, std::size_t n, double slope,
                                    double intercept, double* r1, double* r2);
void two_component_moments_scalar(const double* y, const double* r1, const double* r2,
                                  std::size_t n, double* out);

#if defined(VREM_HAVE_AVX2_TU)
void exp_avx2(const double* x, double* y, std::size_t n);
void lower_matvec_rows_avx2(const double* lower, const double* y, std::size_t rows,
                            std::size_t p, double* z);
void sq_dist_avx2(const double* z, std::size_t rows, std::size_t p, const double* centers,
                  std::size_t g, double* out);
void softmax_rows_avx2(double* logits, std::size_t rows, std::size_t g, double* log_norm);
void accumulate_weighted_avx2(const double* r, const double* y, std::size_t rows,
                              std::size_t g, std::size_t p, double* mass, double* moment);
void two_component_posterior_avx2(const double* y, std::size_t n, double slope,
                                  double intercept, double* r1, double* r2);
void two_component_moments_avx2(const double* y, const double* r1, const double* r2,
                                std::size_t n, double* out);
#endif

}  // namespace vrem::kernels::detail
