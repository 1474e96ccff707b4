#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vrem/dataset.hpp"
#include "vrem/em_core.hpp"

namespace vrem {

enum class RunStatus { kCompleted, kHitEpsilon, kStopped, kDiverged };
const char* to_string(RunStatus status);

enum class MetricCadence { kNone, kEpoch, kEveryIteration };
MetricCadence metric_cadence_from_string(const std::string& text);
const char* to_string(MetricCadence cadence);

enum class EventKind {
  kInitial,  // state after the initialisation step
  kUpdate,   // a new iterate produced by an update of S-hat
  kRestart,  // full refresh without an update (SPIDER-EM-PL)
};

struct IterateEvent {
  EventKind kind;
  const std::string& phase;
  std::uint64_t t;
  std::int64_t k;
  std::int64_t tau;
  std::uint64_t epoch;  // epochs completed so far, all phases included
  bool epoch_end;
  const StatVector& state;
  const OracleCounters& counters;
};

// Return false to stop the run after this event.
using IterateCallback = std::function<bool(const IterateEvent&)>;

struct TraceRecord {
  std::uint64_t epoch = 0;
  std::uint64_t t = 0;
  std::int64_t k = 0;
  std::int64_t tau = 0;
  double W = std::numeric_limits<double>::quiet_NaN();
  double h_sq_norm = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t ce_count = 0;
  std::uint64_t mstep_count = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
  std::string phase;
};

struct Snapshot {
  std::uint64_t t;
  std::int64_t k;
  std::int64_t tau;
  StatVector state;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<Snapshot> snapshots;
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  StatVector final_state;
  OracleCounters counters;  // algorithmic cost, initialisation included
  OracleCounters monitor;   // cost of computing W and ||h||^2 for records
  std::uint64_t updates = 0;
  std::uint64_t epochs = 0;
};

struct RunOptions {
  MetricCadence cadence = MetricCadence::kEpoch;
  bool store_snapshots = false;
  IterateCallback on_iterate;
  std::uint64_t memory_cap_bytes = std::uint64_t{2} << 30;
  // Step for the damped outer update; by default the schedule value at that
  // update index.
  double outer_step = std::numeric_limits<double>::quiet_NaN();
  std::string phase = "main";
};

}  // namespace vrem
