#include "run_context.hpp"

namespace vrem {
namespace detail {

void sem_vr_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                 const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in) {
  require_nested(k_out, k_in);
  ctx.start(s_init);
  ParamPtr anchor = ctx.T(s_init);
  StatVector s_full = ctx.full(*anchor);
  StatVector s = s_init;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t t = 1; t <= k_out; ++t) {
    const auto base = static_cast<std::int64_t>((t - 1) * k_in);
    for (std::uint64_t k = 0; k + 1 < k_in; ++k) {
      const ParamPtr theta = ctx.T(s);
      const auto& batch = sampler.next();
      const StatVector v = s_full - ctx.batch(batch, *anchor);
      const StatVector sb = ctx.batch(batch, *theta);
      const auto tau = base + static_cast<std::int64_t>(k + 1);
      s += schedule.at(static_cast<std::uint64_t>(tau)) * (sb - s + v);
      ctx.emit(EventKind::kUpdate, t, static_cast<std::int64_t>(k + 1), tau, s, k + 2 == k_in);
    }
    anchor = ctx.T(s);
    s_full = ctx.full(*anchor);
    const auto tau = static_cast<std::int64_t>(t * k_in);
    s += outer_gamma(ctx.opts, schedule, static_cast<std::uint64_t>(tau)) * (s_full - s);
    ctx.emit(EventKind::kUpdate, t + 1, 0, tau, s, true);
  }
}

}  // namespace detail

RunTrace run_sem_vr(const Model& model, const Dataset& data, const StatVector& s_init,
                    MinibatchSampler& sampler, const StepSchedule& schedule,
                    std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::sem_vr_impl(ctx, s_init, sampler, schedule, k_out, k_in); });
}

}  // namespace vrem
