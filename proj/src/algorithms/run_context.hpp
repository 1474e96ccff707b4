#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "vrem/algorithms.hpp"
#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/trace.hpp"

namespace vrem::detail {

// Thrown by RunContext::emit when the callback asks to stop.
struct StopRun {};
// Thrown by RunContext::emit on a non-finite iterate or objective.
struct NonFiniteIterate {
  std::string what;
};

// Shared bookkeeping of one run: oracle counters, epochs, snapshots, metric
// records and the user callback. One context may span several phases.
class RunContext {
 public:
  RunContext(const Model& model, const Dataset& data, const RunOptions& opts);

  const Model& model;
  const Dataset& data;
  const RunOptions& opts;
  RunTrace trace;
  std::string phase;

  void start(const StatVector& s_init);

  ParamPtr T(const StatVector& s) { return m_step(model, data, s, &trace.counters); }
  StatVector full(const Parameter& theta) {
    return full_stats(model, data, theta, &trace.counters);
  }
  StatVector batch(std::span<const std::size_t> idx, const Parameter& theta) {
    return minibatch_stats(model, data, idx, theta, &trace.counters);
  }
  Eigen::MatrixXd per_sample(std::span<const std::size_t> idx, const Parameter& theta) {
    return per_sample_stats(model, data, idx, theta, &trace.counters);
  }

  void emit(EventKind kind, std::uint64_t t, std::int64_t k, std::int64_t tau,
            const StatVector& s, bool epoch_end);

  // Rejects per-sample stores larger than the configured memory cap.
  void check_store_budget() const;

  // Runs body, converting stop/divergence into a terminal status.
  template <class Body>
  RunTrace run(Body&& body) {
    try {
      body();
      trace.status = RunStatus::kCompleted;
    } catch (const StopRun&) {
      trace.status = RunStatus::kStopped;
    } catch (const DomainError& e) {
      diverged(e.what());
    } catch (const NonFiniteIterate& e) {
      diverged(e.what);
    }
    if (!trace.records.empty() && trace.records.back().status == "ok")
      trace.records.back().status = to_string(trace.status);
    return std::move(trace);
  }

 private:
  void diverged(const std::string& why);
  double elapsed_ms() const;

  std::chrono::steady_clock::time_point t0_;
};

void em_impl(RunContext& ctx, const StatVector& s_init, std::uint64_t k_max);
void online_em_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                    const StepSchedule& schedule, std::uint64_t k_max);
void iem_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
              const StepSchedule& schedule, std::uint64_t k_max);
void fiem_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
               MinibatchSampler& sampler_prime, const StepSchedule& schedule,
               std::uint64_t k_max);
void sem_vr_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                 const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in);
void spider_em_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                    const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in);
void spider_em_cv_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                       const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in);
void spider_em_pl_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                       const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in,
                       const XiSource& xi);
void dispatch_impl(RunContext& ctx, const StatVector& s_init, const AlgorithmSetup& setup);

// True when iteration k (1-based) of a b-sized single-loop algorithm
// completes another pass worth of n selected examples.
inline bool epoch_tick(std::uint64_t k, std::uint64_t b, std::uint64_t n) {
  return (k * b) / n > ((k - 1) * b) / n;
}

// Step for the damped outer update at update index u.
inline double outer_gamma(const RunOptions& opts, const StepSchedule& schedule, std::uint64_t u) {
  return std::isnan(opts.outer_step) ? schedule.at(u) : opts.outer_step;
}

void require_nested(std::uint64_t k_out, std::uint64_t k_in);

}  // namespace vrem::detail
