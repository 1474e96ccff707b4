#include <cmath>

#include "vrem/algorithms.hpp"
#include "vrem/errors.hpp"

namespace vrem {

StepSizeChoice theoretical_step_size(double L, double v_min, double v_max, double L_gradW,
                                     std::uint64_t k_in, std::uint64_t b) {
  if (!(L > 0.0) || !(v_min > 0.0) || !(v_max > 0.0) || !(L_gradW > 0.0) || k_in == 0 || b == 0)
    throw ArgumentError("step-size constants must all be positive");
  StepSizeChoice out;
  out.mu_star = v_max * std::sqrt(static_cast<double>(k_in) / static_cast<double>(b)) +
                L_gradW / (2.0 * L);
  out.alpha_star = v_min / (2.0 * out.mu_star);
  out.gamma = out.alpha_star / L;
  return out;
}

}  // namespace vrem
