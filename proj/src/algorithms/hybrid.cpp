#include "run_context.hpp"

namespace vrem {

Algorithm algorithm_from_string(const std::string& text) {
  if (text == "em") return Algorithm::kEm;
  if (text == "online-em") return Algorithm::kOnlineEm;
  if (text == "iem") return Algorithm::kIem;
  if (text == "fiem") return Algorithm::kFiem;
  if (text == "sem-vr") return Algorithm::kSemVr;
  if (text == "spider-em") return Algorithm::kSpiderEm;
  if (text == "spider-em-cv") return Algorithm::kSpiderEmCv;
  if (text == "spider-em-pl") return Algorithm::kSpiderEmPl;
  throw ArgumentError("unknown algorithm '" + text + "'");
}

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kEm:
      return "em";
    case Algorithm::kOnlineEm:
      return "online-em";
    case Algorithm::kIem:
      return "iem";
    case Algorithm::kFiem:
      return "fiem";
    case Algorithm::kSemVr:
      return "sem-vr";
    case Algorithm::kSpiderEm:
      return "spider-em";
    case Algorithm::kSpiderEmCv:
      return "spider-em-cv";
    case Algorithm::kSpiderEmPl:
      return "spider-em-pl";
  }
  return "unknown";
}

bool is_nested(Algorithm algo) {
  return algo == Algorithm::kSemVr || algo == Algorithm::kSpiderEm ||
         algo == Algorithm::kSpiderEmCv || algo == Algorithm::kSpiderEmPl;
}

namespace detail {

void dispatch_impl(RunContext& ctx, const StatVector& s_init, const AlgorithmSetup& setup) {
  if (setup.algorithm != Algorithm::kEm && setup.sampler == nullptr)
    throw ArgumentError(std::string(to_string(setup.algorithm)) + " needs a sampler");
  switch (setup.algorithm) {
    case Algorithm::kEm:
      return em_impl(ctx, s_init, setup.k_max);
    case Algorithm::kOnlineEm:
      return online_em_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_max);
    case Algorithm::kIem:
      return iem_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_max);
    case Algorithm::kFiem:
      if (setup.sampler_prime == nullptr) throw ArgumentError("fiem needs a second sampler");
      return fiem_impl(ctx, s_init, *setup.sampler, *setup.sampler_prime, setup.schedule,
                       setup.k_max);
    case Algorithm::kSemVr:
      return sem_vr_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_out, setup.k_in);
    case Algorithm::kSpiderEm:
      return spider_em_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_out,
                            setup.k_in);
    case Algorithm::kSpiderEmCv:
      return spider_em_cv_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_out,
                               setup.k_in);
    case Algorithm::kSpiderEmPl:
      if (!setup.xi) throw ArgumentError("spider-em-pl needs a xi source");
      return spider_em_pl_impl(ctx, s_init, *setup.sampler, setup.schedule, setup.k_out,
                               setup.k_in, setup.xi);
  }
}

}  // namespace detail

RunTrace run_algorithm(const Model& model, const Dataset& data, const StatVector& s_init,
                       const AlgorithmSetup& setup, const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] { detail::dispatch_impl(ctx, s_init, setup); });
}

RunTrace hybrid_warm_start(const Model& model, const Dataset& data, const StatVector& s_init,
                           std::uint64_t warm_epochs, MinibatchSampler& warm_sampler,
                           const StepSchedule& warm_schedule, const AlgorithmSetup& inner,
                           const RunOptions& opts) {
  detail::RunContext ctx(model, data, opts);
  return ctx.run([&] {
    StatVector start = s_init;
    if (warm_epochs > 0) {
      const std::uint64_t n = data.size();
      const std::uint64_t b = warm_sampler.batch_size();
      const std::uint64_t k_warm = (warm_epochs * n + b - 1) / b;
      ctx.phase = "warm";
      detail::online_em_impl(ctx, s_init, warm_sampler, warm_schedule, k_warm);
      start = ctx.trace.final_state;
    }
    ctx.phase = opts.phase;
    detail::dispatch_impl(ctx, start, inner);
  });
}

}  // namespace vrem
