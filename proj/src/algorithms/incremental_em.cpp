#include <numeric>
#include <vector>

#include "run_context.hpp"

namespace vrem {
namespace detail {
namespace {

// Per-sample statistics S_i and their running mean.
struct StatStore {
  Eigen::MatrixXd items;  // q x n
  StatVector mean;

  void init(RunContext& ctx, const StatVector& s_init) {
    ctx.check_store_budget();
    std::vector<std::size_t> all(ctx.data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    items = ctx.per_sample(all, *ctx.T(s_init));
    mean = items.rowwise().sum() / static_cast<double>(ctx.data.size());
  }

  // S_i <- sbar_i(theta) for i in batch, keeping the mean in step.
  void refresh(RunContext& ctx, const std::vector<std::size_t>& batch, const Parameter& theta) {
    const Eigen::MatrixXd fresh = ctx.per_sample(batch, theta);
    const double inv_n = 1.0 / static_cast<double>(items.cols());
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(batch[j]);
      const auto c = static_cast<Eigen::Index>(j);
      mean += (fresh.col(c) - items.col(i)) * inv_n;
      items.col(i) = fresh.col(c);
    }
  }
};

}  // namespace

void iem_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
              const StepSchedule& schedule, std::uint64_t k_max) {
  ctx.start(s_init);
  const std::uint64_t n = ctx.data.size();
  const std::uint64_t b = sampler.batch_size();
  StatStore store;
  store.init(ctx, s_init);
  StatVector s = store.mean;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t k = 0; k < k_max; ++k) {
    const ParamPtr theta = ctx.T(s);
    store.refresh(ctx, sampler.next(), *theta);
    s += schedule.at(k + 1) * (store.mean - s);
    const auto next = static_cast<std::int64_t>(k + 1);
    ctx.emit(EventKind::kUpdate, 1, next, next, s, epoch_tick(k + 1, b, n));
  }
}

void fiem_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
               MinibatchSampler& sampler_prime, const StepSchedule& schedule,
               std::uint64_t k_max) {
  ctx.start(s_init);
  const std::uint64_t n = ctx.data.size();
  const std::uint64_t b = sampler.batch_size();
  StatStore store;
  store.init(ctx, s_init);
  StatVector s = store.mean;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t k = 0; k < k_max; ++k) {
    const ParamPtr theta = ctx.T(s);
    store.refresh(ctx, sampler.next(), *theta);
    const std::vector<std::size_t>& bp = sampler_prime.next();
    StatVector stored = StatVector::Zero(s.size());
    for (std::size_t i : bp) stored += store.items.col(static_cast<Eigen::Index>(i));
    const StatVector v = store.mean - stored / static_cast<double>(bp.size());
    const StatVector sb = ctx.batch(bp, *theta);
    s += schedule.at(k + 1) * (sb - s + v);
    const auto next = static_cast<std::int64_t>(k + 1);
    ctx.emit(EventKind::kUpdate, 1, next, next, s, epoch_tick(k + 1, b, n));
  }
}

}  // namespace detail

RunTrace run_iem(const Model& model, const Dataset& data, const StatVector& s_init,
                 MinibatchSampler& sampler, const StepSchedule& schedule, std::uint64_t k_max,
                 const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::iem_impl(ctx, s_init, sampler, schedule, k_max); });
}

RunTrace run_fiem(const Model& model, const Dataset& data, const StatVector& s_init,
                  MinibatchSampler& sampler, MinibatchSampler& sampler_prime,
                  const StepSchedule& schedule, std::uint64_t k_max, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run(
      [&] { detail::fiem_impl(ctx, s_init, sampler, sampler_prime, schedule, k_max); });
}

}  // namespace vrem
