#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "vrem/dataset.hpp"
#include "vrem/model.hpp"
#include "vrem/sampler.hpp"
#include "vrem/schedule.hpp"
#include "vrem/trace.hpp"

namespace vrem {

// Every runner starts from s_init, reports each iterate through
// RunOptions::on_iterate and returns the trace. A DomainError or a
// non-finite iterate ends the run with status kDiverged instead of throwing.
//
// Iterates are labelled (t, k) with tau = (t - 1) * k_in + k; single-loop
// algorithms use t = 1 and k = iteration. s_init itself is (1, -1).

RunTrace run_em(const Model& model, const Dataset& data, const StatVector& s_init,
                std::uint64_t k_max, const RunOptions& opts = {});

RunTrace run_online_em(const Model& model, const Dataset& data, const StatVector& s_init,
                       MinibatchSampler& sampler, const StepSchedule& schedule,
                       std::uint64_t k_max, const RunOptions& opts = {});

RunTrace run_iem(const Model& model, const Dataset& data, const StatVector& s_init,
                 MinibatchSampler& sampler, const StepSchedule& schedule, std::uint64_t k_max,
                 const RunOptions& opts = {});

RunTrace run_fiem(const Model& model, const Dataset& data, const StatVector& s_init,
                  MinibatchSampler& sampler, MinibatchSampler& sampler_prime,
                  const StepSchedule& schedule, std::uint64_t k_max,
                  const RunOptions& opts = {});

RunTrace run_sem_vr(const Model& model, const Dataset& data, const StatVector& s_init,
                    MinibatchSampler& sampler, const StepSchedule& schedule,
                    std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts = {});

RunTrace run_spider_em(const Model& model, const Dataset& data, const StatVector& s_init,
                       MinibatchSampler& sampler, const StepSchedule& schedule,
                       std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts = {});

// Control-variate form of SPIDER-EM; same trajectory given the same batches.
RunTrace run_spider_em_cv(const Model& model, const Dataset& data, const StatVector& s_init,
                          MinibatchSampler& sampler, const StepSchedule& schedule,
                          std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts = {});

// Draws the inner-loop length xi_t in {1, ..., k_in - 1}.
using XiSource = std::function<std::uint64_t(std::uint64_t k_in)>;
XiSource uniform_xi(std::uint64_t seed);

RunTrace run_spider_em_pl(const Model& model, const Dataset& data, const StatVector& s_init,
                          MinibatchSampler& sampler, const StepSchedule& schedule,
                          std::uint64_t k_out, std::uint64_t k_in, const XiSource& xi,
                          const RunOptions& opts = {});

enum class Algorithm { kEm, kOnlineEm, kIem, kFiem, kSemVr, kSpiderEm, kSpiderEmCv, kSpiderEmPl };
Algorithm algorithm_from_string(const std::string& text);
const char* to_string(Algorithm algo);
bool is_nested(Algorithm algo);

struct AlgorithmSetup {
  Algorithm algorithm = Algorithm::kSpiderEm;
  std::uint64_t k_max = 0;  // single-loop algorithms
  std::uint64_t k_out = 0;  // nested algorithms
  std::uint64_t k_in = 0;
  MinibatchSampler* sampler = nullptr;
  MinibatchSampler* sampler_prime = nullptr;  // FIEM only
  XiSource xi;                                // SPIDER-EM-PL only
  StepSchedule schedule = StepSchedule::constant(1.0);
};

RunTrace run_algorithm(const Model& model, const Dataset& data, const StatVector& s_init,
                       const AlgorithmSetup& setup, const RunOptions& opts = {});

// warm_epochs * n / b iterations of Online EM (rounded up), then the wrapped
// algorithm from the resulting iterate. Records carry phase "warm" or the
// wrapped phase name; counters and epochs accumulate across phases.
RunTrace hybrid_warm_start(const Model& model, const Dataset& data, const StatVector& s_init,
                           std::uint64_t warm_epochs, MinibatchSampler& warm_sampler,
                           const StepSchedule& warm_schedule, const AlgorithmSetup& inner,
                           const RunOptions& opts = {});

struct TerminationDraw {
  std::uint64_t t;
  std::int64_t k;  // xi - 1
  StatVector state;
};

// Draws (tau, xi) uniformly on {1..k_out} x {0..k_in-1} and returns
// S-hat_{tau, xi-1} from the stored snapshots.
TerminationDraw randomized_terminate(const RunTrace& trace, std::uint64_t k_out,
                                     std::uint64_t k_in, std::mt19937_64& rng);
// The snapshot at (t, k), with k = -1 resolved to (t - 1, k_in - 1) or s_init.
const StatVector& snapshot_at(const RunTrace& trace, std::uint64_t t, std::int64_t k,
                              std::uint64_t k_in);

struct StepSizeChoice {
  double gamma;
  double mu_star;
  double alpha_star;
};

// mu* = v_max sqrt(k_in / b) + L_gradW / (2 L), alpha* = v_min / (2 mu*),
// gamma = alpha* / L.
StepSizeChoice theoretical_step_size(double L, double v_min, double v_max, double L_gradW,
                                     std::uint64_t k_in, std::uint64_t b);

}  // namespace vrem
