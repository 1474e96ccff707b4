#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "vrem/kernels.hpp"

namespace vrem::kernels {
namespace {

const KernelTable kScalar{
    Backend::kScalar,
    "scalar",
    &detail::exp_scalar,
    &detail::lower_matvec_rows_scalar,
    &detail::sq_dist_scalar,
    &detail::softmax_rows_scalar,
    &detail::accumulate_weighted_scalar,
    &detail::two_component_posterior_scalar,
    &detail::two_component_moments_scalar,
};

#if defined(VREM_HAVE_AVX2_TU)
const KernelTable kAvx2{
    Backend::kAvx2,
    "avx2",
    &detail::exp_avx2,
    &detail::lower_matvec_rows_avx2,
    &detail::sq_dist_avx2,
    &detail::softmax_rows_avx2,
    &detail::accumulate_weighted_avx2,
    &detail::two_component_posterior_avx2,
    &detail::two_component_moments_avx2,
};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* initial_table() {
  const char* env = std::getenv("VREM_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_table()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(VREM_HAVE_AVX2_TU)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Backend backend) {
  const KernelTable* t = backend == Backend::kScalar ? &kScalar : avx2_table();
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kScalar ? "scalar" : "avx2";
}

}  // namespace vrem::kernels
