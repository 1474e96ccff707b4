#include <cmath>
#include <limits>

#include "run_context.hpp"
#include "vrem/errors.hpp"

namespace vrem {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kHitEpsilon:
      return "hit-epsilon";
    case RunStatus::kStopped:
      return "stopped";
    case RunStatus::kDiverged:
      return "diverged";
  }
  return "unknown";
}

MetricCadence metric_cadence_from_string(const std::string& text) {
  if (text == "none") return MetricCadence::kNone;
  if (text == "epoch") return MetricCadence::kEpoch;
  if (text == "every-iteration" || text == "iteration") return MetricCadence::kEveryIteration;
  throw ArgumentError("unknown metric cadence '" + text + "'");
}

const char* to_string(MetricCadence cadence) {
  switch (cadence) {
    case MetricCadence::kNone:
      return "none";
    case MetricCadence::kEpoch:
      return "epoch";
    case MetricCadence::kEveryIteration:
      return "every-iteration";
  }
  return "unknown";
}

namespace detail {

RunContext::RunContext(const Model& m, const Dataset& d, const RunOptions& o)
    : model(m), data(d), opts(o), phase(o.phase), t0_(std::chrono::steady_clock::now()) {}

double RunContext::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
      .count();
}

void RunContext::start(const StatVector& s_init) {
  if (static_cast<std::size_t>(s_init.size()) != model.stat_dim())
    throw ArgumentError("initial statistic has length " + std::to_string(s_init.size()) +
                        ", model expects " + std::to_string(model.stat_dim()));
  trace.final_state = s_init;
  if (opts.store_snapshots && trace.snapshots.empty())
    trace.snapshots.push_back(Snapshot{1, -1, -1, s_init});
}

void RunContext::emit(EventKind kind, std::uint64_t t, std::int64_t k, std::int64_t tau,
                      const StatVector& s, bool epoch_end) {
  if (!s.allFinite()) throw NonFiniteIterate{"non-finite iterate"};
  trace.final_state = s;
  if (kind == EventKind::kUpdate) ++trace.updates;
  if (epoch_end) ++trace.epochs;
  if (opts.store_snapshots) trace.snapshots.push_back(Snapshot{t, k, tau, s});

  const bool record = opts.cadence == MetricCadence::kEveryIteration ||
                      (opts.cadence == MetricCadence::kEpoch && epoch_end);
  if (record) {
    TraceRecord rec;
    rec.epoch = trace.epochs;
    rec.t = t;
    rec.k = k;
    rec.tau = tau;
    const ParamPtr theta = m_step(model, data, s, &trace.monitor);
    const StatVector h = full_stats(model, data, *theta, &trace.monitor) - s;
    rec.h_sq_norm = h.squaredNorm();
    rec.W = penalized_nll(model, data, *theta);
    rec.ce_count = trace.counters.ce;
    rec.mstep_count = trace.counters.mstep;
    rec.wall_ms = elapsed_ms();
    rec.phase = phase;
    trace.records.push_back(std::move(rec));
    if (!std::isfinite(trace.records.back().W) || !std::isfinite(trace.records.back().h_sq_norm))
      throw NonFiniteIterate{"non-finite objective"};
  }

  if (opts.on_iterate) {
    const IterateEvent ev{kind, phase, t, k, tau, trace.epochs, epoch_end, s, trace.counters};
    if (!opts.on_iterate(ev)) throw StopRun{};
  }
}

void RunContext::check_store_budget() const {
  const std::uint64_t bytes = static_cast<std::uint64_t>(data.size()) * model.stat_dim() * sizeof(double);
  if (bytes > opts.memory_cap_bytes)
    throw ArgumentError("per-sample statistic store needs " + std::to_string(bytes) +
                        " bytes, above the cap of " + std::to_string(opts.memory_cap_bytes));
}

void RunContext::diverged(const std::string& why) {
  trace.status = RunStatus::kDiverged;
  trace.message = why;
  if (opts.cadence != MetricCadence::kNone) {
    TraceRecord rec;
    rec.epoch = trace.epochs;
    rec.ce_count = trace.counters.ce;
    rec.mstep_count = trace.counters.mstep;
    rec.wall_ms = elapsed_ms();
    rec.status = "diverged";
    rec.phase = phase;
    if (!trace.records.empty()) {
      rec.t = trace.records.back().t;
      rec.k = trace.records.back().k;
      rec.tau = trace.records.back().tau;
    }
    trace.records.push_back(std::move(rec));
  }
}

void require_nested(std::uint64_t k_out, std::uint64_t k_in) {
  if (k_in < 2) throw ArgumentError("k_in must be >= 2");
  if (k_out < 1) throw ArgumentError("k_out must be >= 1");
}

}  // namespace detail
}  // namespace vrem
