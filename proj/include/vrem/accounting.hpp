#pragma once

#include <cstdint>
#include <vector>

#include "vrem/algorithms.hpp"
#include "vrem/em_core.hpp"

namespace vrem {

// Terminal oracle counters of a complete run, initialisation included.
//   em:                 ce = n + n k_max,              mstep = 1 + k_max
//   online-em, iem:     ce = n + b k_max,              mstep = 1 + k_max
//   fiem:               ce = n + 2 b k_max,            mstep = 1 + k_max
//   sem-vr, spider-em:  ce = n + k_out (n + 2 b (k_in - 1)),
//                       mstep = 1 + k_out k_in
OracleCounters closed_form_counters(Algorithm algo, std::uint64_t n, std::uint64_t b,
                                    std::uint64_t k_max, std::uint64_t k_out,
                                    std::uint64_t k_in);

// SPIDER-EM-PL with inner-loop lengths xi_1..xi_kout:
//   ce = n + sum_t (n + 2 b xi_t),  mstep = 1 + sum_t (xi_t + 1)
OracleCounters closed_form_counters_pl(std::uint64_t n, std::uint64_t b,
                                       const std::vector<std::uint64_t>& xi);

// Cost of the initialisation step that precedes the first epoch.
OracleCounters init_cost(Algorithm algo, std::uint64_t n);

// Oracle cost of each kind of epoch, in the order they alternate. Single-loop
// algorithms have one kind; sem-vr and spider-em have the inner-loop epoch
// followed by the refresh epoch.
std::vector<OracleCounters> epoch_accounting(Algorithm algo, std::uint64_t n, std::uint64_t b,
                                             std::uint64_t k_in);

}  // namespace vrem
