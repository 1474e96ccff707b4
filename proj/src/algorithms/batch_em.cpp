#include "run_context.hpp"

namespace vrem {
namespace detail {

void em_impl(RunContext& ctx, const StatVector& s_init, std::uint64_t k_max) {
  ctx.start(s_init);
  StatVector s = ctx.full(*ctx.T(s_init));
  ctx.emit(EventKind::kInitial, 1, 0, 0, s, false);
  for (std::uint64_t k = 0; k < k_max; ++k) {
    s = ctx.full(*ctx.T(s));
    const auto next = static_cast<std::int64_t>(k + 1);
    ctx.emit(EventKind::kUpdate, 1, next, next, s, true);
  }
}

}  // namespace detail

RunTrace run_em(const Model& model, const Dataset& data, const StatVector& s_init,
                std::uint64_t k_max, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::em_impl(ctx, s_init, k_max); });
}

}  // namespace vrem
