#include "vrem/accounting.hpp"

#include "vrem/errors.hpp"

namespace vrem {

OracleCounters closed_form_counters(Algorithm algo, std::uint64_t n, std::uint64_t b,
                                    std::uint64_t k_max, std::uint64_t k_out,
                                    std::uint64_t k_in) {
  switch (algo) {
    case Algorithm::kEm:
      return {n + n * k_max, 1 + k_max};
    case Algorithm::kOnlineEm:
    case Algorithm::kIem:
      return {n + b * k_max, 1 + k_max};
    case Algorithm::kFiem:
      return {n + 2 * b * k_max, 1 + k_max};
    case Algorithm::kSemVr:
    case Algorithm::kSpiderEm:
    case Algorithm::kSpiderEmCv:
      if (k_in < 2) throw ArgumentError("k_in must be >= 2");
      return {n + k_out * (n + 2 * b * (k_in - 1)), 1 + k_out * k_in};
    case Algorithm::kSpiderEmPl:
      throw ArgumentError("spider-em-pl cost depends on the drawn xi; use closed_form_counters_pl");
  }
  return {};
}

OracleCounters closed_form_counters_pl(std::uint64_t n, std::uint64_t b,
                                       const std::vector<std::uint64_t>& xi) {
  OracleCounters c{n, 1};
  for (std::uint64_t x : xi) {
    c.ce += n + 2 * b * x;
    c.mstep += x + 1;
  }
  return c;
}

OracleCounters init_cost(Algorithm, std::uint64_t n) { return {n, 1}; }

std::vector<OracleCounters> epoch_accounting(Algorithm algo, std::uint64_t n, std::uint64_t b,
                                             std::uint64_t k_in) {
  if (n == 0 || b == 0) throw ArgumentError("n and b must be >= 1");
  const bool single = algo == Algorithm::kOnlineEm || algo == Algorithm::kIem ||
                      algo == Algorithm::kFiem;
  if (single && n % b != 0)
    throw ArgumentError("epoch accounting needs b to divide n for single-loop algorithms");
  switch (algo) {
    case Algorithm::kEm:
      return {{n, 1}};
    case Algorithm::kOnlineEm:
    case Algorithm::kIem:
      return {{n, n / b}};
    case Algorithm::kFiem:
      return {{2 * n, n / b}};
    case Algorithm::kSemVr:
    case Algorithm::kSpiderEm:
    case Algorithm::kSpiderEmCv:
      if (k_in < 2) throw ArgumentError("k_in must be >= 2");
      return {{2 * b * (k_in - 1), k_in - 1}, {n, 1}};
    case Algorithm::kSpiderEmPl:
      throw ArgumentError("spider-em-pl epochs have random length");
  }
  return {};
}

}  // namespace vrem
