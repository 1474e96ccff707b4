#include "run_context.hpp"

namespace vrem {
namespace detail {

void online_em_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                    const StepSchedule& schedule, std::uint64_t k_max) {
  ctx.start(s_init);
  const std::uint64_t n = ctx.data.size();
  const std::uint64_t b = sampler.batch_size();
  StatVector s = ctx.full(*ctx.T(s_init));
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t k = 0; k < k_max; ++k) {
    const ParamPtr theta = ctx.T(s);
    const StatVector sb = ctx.batch(sampler.next(), *theta);
    s += schedule.at(k + 1) * (sb - s);
    const auto next = static_cast<std::int64_t>(k + 1);
    ctx.emit(EventKind::kUpdate, 1, next, next, s, epoch_tick(k + 1, b, n));
  }
}

}  // namespace detail

RunTrace run_online_em(const Model& model, const Dataset& data, const StatVector& s_init,
                       MinibatchSampler& sampler, const StepSchedule& schedule,
                       std::uint64_t k_max, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::online_em_impl(ctx, s_init, sampler, schedule, k_max); });
}

}  // namespace vrem
