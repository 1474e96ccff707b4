#pragma once

#include <cstdint>
#include <string>

#include "vrem/dataset.hpp"
#include "vrem/gmm.hpp"

namespace vrem {

enum class InitMethod {
  kRandomResponsibility,  // Dirichlet(1) soft assignments, then one M-step
  kKmeansSeed,            // D^2-weighted data points as means, data covariance
};

InitMethod init_method_from_string(const std::string& text);
const char* to_string(InitMethod method);

GmmParameter gmm_init(const Dataset& data, std::size_t g, InitMethod method, std::uint64_t seed);

inline ScalarTwoGmmParameter scalar2_default_init() {
  ScalarTwoGmmParameter th;
  th.mu1 = 1.0;
  th.mu2 = -1.0;
  return th;
}

}  // namespace vrem
