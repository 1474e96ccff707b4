// AVX2 variants. This translation unit is compiled with -mavx2 -mfma and must
// only be entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kernels_impl.hpp"

namespace vrem::kernels::detail {
namespace {

// Cephes-style exp: x = n ln2 + r, |r| <= ln2/2, exp(r) from a (2,3) Pade
// form in r^2, then scaled by 2^n in two halves so subnormal results survive.
inline __m256d exp4(__m256d x) {
  const __m256d kHi = _mm256_set1_pd(709.78271289338397);
  const __m256d kLo = _mm256_set1_pd(-745.13321910194122);
  const __m256d kLog2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d kC1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d kC2 = _mm256_set1_pd(1.42860682030941723212E-6);
  const __m256d kP0 = _mm256_set1_pd(1.26177193074810590878E-4);
  const __m256d kP1 = _mm256_set1_pd(3.02994407707441961300E-2);
  const __m256d kP2 = _mm256_set1_pd(9.99999999999999999910E-1);
  const __m256d kQ0 = _mm256_set1_pd(3.00198505138664455042E-6);
  const __m256d kQ1 = _mm256_set1_pd(2.52448340349684104192E-3);
  const __m256d kQ2 = _mm256_set1_pd(2.27265548208155028766E-1);
  const __m256d kQ3 = _mm256_set1_pd(2.00000000000000000009E0);
  const __m256d kOne = _mm256_set1_pd(1.0);
  const __m256d kTwo = _mm256_set1_pd(2.0);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, kLo), kHi);
  const __m256d fx =
      _mm256_round_pd(_mm256_mul_pd(xc, kLog2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(fx, kC1, xc);
  r = _mm256_fnmadd_pd(fx, kC2, r);
  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(kP0, rr, kP1);
  p = _mm256_fmadd_pd(p, rr, kP2);
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(kQ0, rr, kQ1);
  q = _mm256_fmadd_pd(q, rr, kQ2);
  q = _mm256_fmadd_pd(q, rr, kQ3);
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(kTwo, e, kOne);

  const __m128i n = _mm256_cvtpd_epi32(fx);
  const __m128i n1 = _mm_srai_epi32(n, 1);
  const __m128i n2 = _mm_sub_epi32(n, n1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d s1 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n1), bias), 52));
  const __m256d s2 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n2), bias), 52));
  __m256d out = _mm256_mul_pd(_mm256_mul_pd(e, s1), s2);

  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  out = _mm256_blendv_pd(out, inf, _mm256_cmp_pd(x, kHi, _CMP_GT_OQ));
  out = _mm256_blendv_pd(out, _mm256_setzero_pd(), _mm256_cmp_pd(x, kLo, _CMP_LT_OQ));
  out = _mm256_blendv_pd(out, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  return out;
}

}  // namespace

void exp_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = i; k < n; ++k) buf[k - i] = x[k];
    _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
    for (std::size_t k = i; k < n; ++k) y[k] = buf[k - i];
  }
}

void lower_matvec_rows_avx2(const double* lower, const double* y, std::size_t rows,
                            std::size_t p, double* z) {
  // Column-major copy so each column update is a contiguous axpy over the
  // output rows r >= c. Per output element the terms are added in ascending
  // c, which is the scalar order.
  std::vector<double> col(p * p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c) col[c * p + r] = c <= r ? lower[r * p + c] : 0.0;

  for (std::size_t i = 0; i < rows; ++i) {
    const double* yi = y + i * p;
    double* zi = z + i * p;
    std::fill(zi, zi + p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
      const double* lc = col.data() + c * p;
      const __m256d yc = _mm256_set1_pd(yi[c]);
      std::size_t r = c;
      for (; r + 4 <= p; r += 4) {
        const __m256d acc = _mm256_loadu_pd(zi + r);
        _mm256_storeu_pd(zi + r, _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(lc + r), yc)));
      }
      for (; r < p; ++r) zi[r] += lc[r] * yi[c];
    }
  }
}

void sq_dist_avx2(const double* z, std::size_t rows, std::size_t p, const double* centers,
                  std::size_t g, double* out) {
  // Centers transposed to p x g_pad so four centers are handled per vector;
  // each distance still sums its p terms in ascending order.
  const std::size_t g_pad = (g + 3) & ~std::size_t{3};
  std::vector<double> ct(p * g_pad, 0.0);
  for (std::size_t l = 0; l < g; ++l)
    for (std::size_t j = 0; j < p; ++j) ct[j * g_pad + l] = centers[l * p + j];

  alignas(32) double tmp[4];
  for (std::size_t i = 0; i < rows; ++i) {
    const double* zi = z + i * p;
    double* oi = out + i * g;
    for (std::size_t l0 = 0; l0 < g_pad; l0 += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t j = 0; j < p; ++j) {
        const __m256d d = _mm256_sub_pd(_mm256_set1_pd(zi[j]), _mm256_loadu_pd(&ct[j * g_pad + l0]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
      }
      if (l0 + 4 <= g) {
        _mm256_storeu_pd(oi + l0, acc);
      } else {
        _mm256_store_pd(tmp, acc);
        for (std::size_t l = l0; l < g; ++l) oi[l] = tmp[l - l0];
      }
    }
  }
}

void softmax_rows_avx2(double* logits, std::size_t rows, std::size_t g, double* log_norm) {
  softmax_rows_with(logits, rows, g, log_norm, &exp_avx2);
}

void accumulate_weighted_avx2(const double* r, const double* y, std::size_t rows,
                              std::size_t g, std::size_t p, double* mass, double* moment) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* ri = r + i * g;
    const double* yi = y + i * p;
    std::size_t l = 0;
    for (; l + 4 <= g; l += 4)
      _mm256_storeu_pd(mass + l, _mm256_add_pd(_mm256_loadu_pd(mass + l), _mm256_loadu_pd(ri + l)));
    for (; l < g; ++l) mass[l] += ri[l];
    for (l = 0; l < g; ++l) {
      double* ml = moment + l * p;
      const __m256d w = _mm256_set1_pd(ri[l]);
      std::size_t j = 0;
      for (; j + 4 <= p; j += 4) {
        const __m256d prod = _mm256_mul_pd(w, _mm256_loadu_pd(yi + j));
        _mm256_storeu_pd(ml + j, _mm256_add_pd(_mm256_loadu_pd(ml + j), prod));
      }
      for (; j < p; ++j) ml[j] += ri[l] * yi[j];
    }
  }
}

void two_component_posterior_avx2(const double* y, std::size_t n, double slope,
                                  double intercept, double* r1, double* r2) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d vi = _mm256_set1_pd(intercept);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_add_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(y + i)), vi);
    const __m256d neg_abs = _mm256_or_pd(d, sign);
    const __m256d e = exp4(neg_abs);
    const __m256d big = _mm256_div_pd(one, _mm256_add_pd(one, e));
    const __m256d small = _mm256_mul_pd(e, big);
    const __m256d nonneg = _mm256_cmp_pd(d, _mm256_setzero_pd(), _CMP_GE_OQ);
    _mm256_storeu_pd(r1 + i, _mm256_blendv_pd(small, big, nonneg));
    _mm256_storeu_pd(r2 + i, _mm256_blendv_pd(big, small, nonneg));
  }
  for (; i < n; ++i) {
    const double d = slope * y[i] + intercept;
    alignas(32) double buf[4] = {-std::fabs(d), 0.0, 0.0, 0.0};
    _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
    const double e = buf[0];
    const double big = 1.0 / (1.0 + e);
    const double small = e * big;
    r1[i] = d >= 0.0 ? big : small;
    r2[i] = d >= 0.0 ? small : big;
  }
}

void two_component_moments_avx2(const double* y, const double* r1, const double* r2,
                                std::size_t n, double* out) {
  __m256d m1 = _mm256_setzero_pd(), m2 = _mm256_setzero_pd();
  __m256d w1 = _mm256_setzero_pd(), w2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d a = _mm256_loadu_pd(r1 + i);
    const __m256d b = _mm256_loadu_pd(r2 + i);
    m1 = _mm256_add_pd(m1, a);
    m2 = _mm256_add_pd(m2, b);
    w1 = _mm256_add_pd(w1, _mm256_mul_pd(a, yv));
    w2 = _mm256_add_pd(w2, _mm256_mul_pd(b, yv));
  }
  alignas(32) double l1[4], l2[4], l3[4], l4[4];
  _mm256_store_pd(l1, m1);
  _mm256_store_pd(l2, m2);
  _mm256_store_pd(l3, w1);
  _mm256_store_pd(l4, w2);
  for (std::size_t lane = 0; i < n; ++i, ++lane) {
    l1[lane] += r1[i];
    l2[lane] += r2[i];
    l3[lane] += r1[i] * y[i];
    l4[lane] += r2[i] * y[i];
  }
  out[0] = (l1[0] + l1[1]) + (l1[2] + l1[3]);
  out[1] = (l2[0] + l2[1]) + (l2[2] + l2[3]);
  out[2] = (l3[0] + l3[1]) + (l3[2] + l3[3]);
  out[3] = (l4[0] + l4[1]) + (l4[2] + l4[3]);
}

}  // namespace vrem::kernels::detail
