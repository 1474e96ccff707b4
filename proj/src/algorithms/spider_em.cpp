#include <random>

#include "run_context.hpp"

namespace vrem {
namespace detail {

void spider_em_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                    const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in) {
  require_nested(k_out, k_in);
  ctx.start(s_init);
  ParamPtr prev = ctx.T(s_init);
  StatVector s_mem = ctx.full(*prev);
  StatVector s = s_init;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t t = 1; t <= k_out; ++t) {
    const auto base = static_cast<std::int64_t>((t - 1) * k_in);
    for (std::uint64_t k = 0; k + 1 < k_in; ++k) {
      ParamPtr cur = ctx.T(s);
      const auto& batch = sampler.next();
      s_mem += ctx.batch(batch, *cur) - ctx.batch(batch, *prev);
      const auto tau = base + static_cast<std::int64_t>(k + 1);
      s += schedule.at(static_cast<std::uint64_t>(tau)) * (s_mem - s);
      prev = std::move(cur);
      ctx.emit(EventKind::kUpdate, t, static_cast<std::int64_t>(k + 1), tau, s, k + 2 == k_in);
    }
    prev = ctx.T(s);
    s_mem = ctx.full(*prev);
    const auto tau = static_cast<std::int64_t>(t * k_in);
    s += outer_gamma(ctx.opts, schedule, static_cast<std::uint64_t>(tau)) * (s_mem - s);
    ctx.emit(EventKind::kUpdate, t + 1, 0, tau, s, true);
  }
}

void spider_em_cv_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                       const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in) {
  require_nested(k_out, k_in);
  ctx.start(s_init);
  ParamPtr prev = ctx.T(s_init);
  StatVector s_tilde = ctx.full(*prev);
  StatVector s = s_init;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t t = 1; t <= k_out; ++t) {
    const auto base = static_cast<std::int64_t>((t - 1) * k_in);
    StatVector v = StatVector::Zero(s.size());
    for (std::uint64_t k = 0; k + 1 < k_in; ++k) {
      ParamPtr cur = ctx.T(s);
      const auto& batch = sampler.next();
      v += s_tilde - ctx.batch(batch, *prev);
      s_tilde = ctx.batch(batch, *cur);
      const auto tau = base + static_cast<std::int64_t>(k + 1);
      s += schedule.at(static_cast<std::uint64_t>(tau)) * (s_tilde - s + v);
      prev = std::move(cur);
      ctx.emit(EventKind::kUpdate, t, static_cast<std::int64_t>(k + 1), tau, s, k + 2 == k_in);
    }
    prev = ctx.T(s);
    s_tilde = ctx.full(*prev);
    const auto tau = static_cast<std::int64_t>(t * k_in);
    s += outer_gamma(ctx.opts, schedule, static_cast<std::uint64_t>(tau)) * (s_tilde - s);
    ctx.emit(EventKind::kUpdate, t + 1, 0, tau, s, true);
  }
}

void spider_em_pl_impl(RunContext& ctx, const StatVector& s_init, MinibatchSampler& sampler,
                       const StepSchedule& schedule, std::uint64_t k_out, std::uint64_t k_in,
                       const XiSource& xi) {
  require_nested(k_out, k_in);
  ctx.start(s_init);
  ParamPtr prev = ctx.T(s_init);
  StatVector s_mem = ctx.full(*prev);
  StatVector s = s_init;
  std::int64_t tau = 0;
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t t = 1; t <= k_out; ++t) {
    const std::uint64_t len = xi(k_in);
    if (len < 1 || len >= k_in) throw ArgumentError("xi must lie in {1, ..., k_in - 1}");
    for (std::uint64_t k = 0; k < len; ++k) {
      ParamPtr cur = ctx.T(s);
      const auto& batch = sampler.next();
      s_mem += ctx.batch(batch, *cur) - ctx.batch(batch, *prev);
      ++tau;
      s += schedule.at(static_cast<std::uint64_t>(tau)) * (s_mem - s);
      prev = std::move(cur);
      ctx.emit(EventKind::kUpdate, t, static_cast<std::int64_t>(k + 1), tau, s, k + 1 == len);
    }
    prev = ctx.T(s);
    s_mem = ctx.full(*prev);
    ctx.emit(EventKind::kRestart, t + 1, 0, tau, s, true);
  }
}

}  // namespace detail

XiSource uniform_xi(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](std::uint64_t k_in) {
    std::uniform_int_distribution<std::uint64_t> pick(1, k_in - 1);
    return pick(*rng);
  };
}

RunTrace run_spider_em(const Model& model, const Dataset& data, const StatVector& s_init,
                       MinibatchSampler& sampler, const StepSchedule& schedule,
                       std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::spider_em_impl(ctx, s_init, sampler, schedule, k_out, k_in); });
}

RunTrace run_spider_em_cv(const Model& model, const Dataset& data, const StatVector& s_init,
                          MinibatchSampler& sampler, const StepSchedule& schedule,
                          std::uint64_t k_out, std::uint64_t k_in, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run(
      [&] { detail::spider_em_cv_impl(ctx, s_init, sampler, schedule, k_out, k_in); });
}

RunTrace run_spider_em_pl(const Model& model, const Dataset& data, const StatVector& s_init,
                          MinibatchSampler& sampler, const StepSchedule& schedule,
                          std::uint64_t k_out, std::uint64_t k_in, const XiSource& xi,
                          const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run(
      [&] { detail::spider_em_pl_impl(ctx, s_init, sampler, schedule, k_out, k_in, xi); });
}

}  // namespace vrem
