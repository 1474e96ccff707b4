#include <random>

#include "vrem/algorithms.hpp"
#include "vrem/errors.hpp"

namespace vrem {

const StatVector& snapshot_at(const RunTrace& trace, std::uint64_t t, std::int64_t k,
                              std::uint64_t k_in) {
  if (trace.snapshots.empty())
    throw UnsupportedOperation("trace holds no iterate snapshots; enable store_snapshots");
  if (k == -1 && t > 1) {
    t -= 1;
    k = static_cast<std::int64_t>(k_in) - 1;
  }
  for (const Snapshot& snap : trace.snapshots)
    if (snap.t == t && snap.k == k) return snap.state;
  throw UnsupportedOperation("no snapshot stored for (t = " + std::to_string(t) +
                             ", k = " + std::to_string(k) + ")");
}

TerminationDraw randomized_terminate(const RunTrace& trace, std::uint64_t k_out,
                                     std::uint64_t k_in, std::mt19937_64& rng) {
  if (k_out < 1 || k_in < 1) throw ArgumentError("k_out and k_in must be >= 1");
  std::uniform_int_distribution<std::uint64_t> pick_t(1, k_out);
  std::uniform_int_distribution<std::uint64_t> pick_xi(0, k_in - 1);
  const std::uint64_t t = pick_t(rng);
  const auto k = static_cast<std::int64_t>(pick_xi(rng)) - 1;
  return TerminationDraw{t, k, snapshot_at(trace, t, k, k_in)};
}

}  // namespace vrem
