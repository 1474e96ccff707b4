#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/gmm.hpp"
#include "vrem/harness.hpp"
#include "vrem/kernels.hpp"
#include "vrem/schedule.hpp"

namespace vrem {
namespace {

bool takes_warm_start(Algorithm a) {
  return a == Algorithm::kFiem || is_nested(a);
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string trace_name(Algorithm a, std::uint64_t seed) {
  return std::string("trace_") + to_string(a) + "_" + std::to_string(seed) + ".csv";
}

}  // namespace

RawDataset build_raw_data(const DataSpec& d) {
  RawDataset raw;
  if (d.source == "scalar-mixture") {
    raw = gen_scalar_mixture(d.n, d.weights.at(0), d.weights.at(1), d.means.at(0), d.means.at(1),
                             d.variance, d.seed);
  } else if (d.source == "multivariate-mixture") {
    raw = gen_multivariate_mixture(d.n, d.g, d.p, d.separation, d.seed);
  } else if (d.source == "image-like") {
    raw = gen_image_like(d.n, d.d, d.zero_columns, d.g, d.latent, d.separation, d.seed);
  } else if (d.source == "file") {
    const DataFormat fmt =
        d.format.empty() ? data_format_from_path(d.path) : data_format_from_string(d.format);
    raw = load_dataset(d.path, fmt, d.header);
  } else {
    throw ArgumentError("unknown data source '" + d.source + "'");
  }
  if (d.remove_constant) raw = remove_constant_features(raw).first;
  if (d.pca > 0) raw = pca_apply(pca_fit(raw, d.pca), raw);
  return raw;
}

PreparedProblem prepare_problem(const ExperimentConfig& cfg) {
  PreparedProblem prob;
  prob.raw = build_raw_data(cfg.data);
  prob.data = std::make_shared<const Dataset>(prob.raw.values);
  const Dataset& data = *prob.data;
  if (cfg.model == ModelKind::kScalar2) {
    if (data.dim() != 1) throw ConfigError("model.kind", "scalar2 needs one-dimensional data");
    auto model = std::make_shared<const ScalarTwoGmmModel>(cfg.scalar_weight1);
    const ScalarTwoGmmParameter theta = scalar2_default_init();
    prob.s_init = full_stats(*model, data, theta);
    prob.model = model;
  } else {
    if (cfg.p != 0 && cfg.p != data.dim())
      throw ConfigError("model.p", "data has " + std::to_string(data.dim()) + " columns");
    auto model = std::make_shared<const GmmModel>(cfg.g, data.dim());
    const GmmParameter theta = gmm_init(data, cfg.g, cfg.init, cfg.init_seed);
    prob.s_init = full_stats(*model, data, theta);
    prob.model = model;
  }
  return prob;
}

RunPlan plan_run(const ExperimentConfig& cfg, Algorithm algo, std::size_t n) {
  RunPlan plan;
  plan.algorithm = algo;
  auto it = cfg.step_override.find(algo);
  plan.step = it != cfg.step_override.end() ? it->second : cfg.step;
  plan.warm_epochs = takes_warm_start(algo) ? cfg.warm_epochs : 0;
  const std::uint64_t b = std::max<std::uint64_t>(cfg.b, 1);
  if (cfg.epochs == 0) {
    plan.k_max = cfg.k_max;
    plan.k_out = cfg.k_out;
    plan.k_in = cfg.k_in;
    return plan;
  }
  const std::uint64_t main_epochs = cfg.epochs - plan.warm_epochs;
  switch (algo) {
    case Algorithm::kEm:
      plan.k_max = cfg.epochs;
      break;
    case Algorithm::kOnlineEm:
    case Algorithm::kIem:
    case Algorithm::kFiem:
      plan.k_max = ceil_div(main_epochs * n, b);
      break;
    default:
      plan.k_out = main_epochs / 2;
      plan.k_in = cfg.k_in ? cfg.k_in : 1 + ceil_div(n, b);
      break;
  }
  return plan;
}

RunTrace execute_run(const ExperimentConfig& cfg, const PreparedProblem& prob, Algorithm algo,
                     std::uint64_t seed) {
  const Dataset& data = *prob.data;
  const std::size_t n = data.size();
  const RunPlan plan = plan_run(cfg, algo, n);
  const std::size_t b = std::max<std::size_t>(cfg.b, 1);

  MinibatchSampler sampler(n, b, cfg.sampling, derive_seed(seed, 0));
  MinibatchSampler sampler_prime(n, b, cfg.sampling, derive_seed(seed, 1));

  AlgorithmSetup setup;
  setup.algorithm = algo;
  setup.k_max = plan.k_max;
  setup.k_out = plan.k_out;
  setup.k_in = plan.k_in;
  setup.sampler = algo == Algorithm::kEm ? nullptr : &sampler;
  setup.sampler_prime = &sampler_prime;
  setup.xi = uniform_xi(derive_seed(seed, 2));
  setup.schedule = StepSchedule::parse(plan.step);

  RunOptions opts;
  opts.cadence = cfg.cadence;
  opts.store_snapshots = cfg.snapshots;
  bool hit = false;
  if (cfg.epsilon > 0.0) {
    const Model& model = *prob.model;
    const double eps = cfg.epsilon;
    opts.on_iterate = [&, eps](const IterateEvent& ev) {
      if (!ev.epoch_end || ev.phase == "warm") return true;
      hit = mean_field(model, data, ev.state).squaredNorm() <= eps;
      return !hit;
    };
  }

  RunTrace trace;
  if (plan.warm_epochs > 0) {
    const StepSchedule warm = StepSchedule::parse(cfg.warm_step.empty() ? plan.step : cfg.warm_step);
    trace = hybrid_warm_start(*prob.model, data, prob.s_init, plan.warm_epochs, sampler, warm,
                              setup, opts);
  } else {
    trace = run_algorithm(*prob.model, data, prob.s_init, setup, opts);
  }
  if (hit && trace.status == RunStatus::kStopped) {
    trace.status = RunStatus::kHitEpsilon;
    if (!trace.records.empty()) trace.records.back().status = to_string(trace.status);
  }
  return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs) {
  validate_config(cfg);
  const PreparedProblem prob = prepare_problem(cfg);
  namespace fs = std::filesystem;
  const fs::path out(cfg.output);
  fs::create_directories(out);

  {
    std::ofstream m(out / "manifest.txt");
    m << "library = vrem " << kLibraryVersion << "\n";
    m << "config_hash = " << hex64(config_hash(cfg)) << "\n";
    m << "kernels = " << kernels::active().name << "\n";
    m << "data = " << prob.raw.provenance << "\n";
    m << "data_shape = " << prob.data->size() << "x" << prob.data->dim() << "\n";
    m << "model = " << prob.model->name() << " q=" << prob.model->stat_dim() << "\n";
    m << "\n" << canonical_config(cfg);
  }

  struct Job {
    Algorithm algo;
    std::uint64_t seed;
  };
  std::vector<Job> queue;
  for (Algorithm a : cfg.algorithms)
    for (std::uint64_t s : cfg.seeds) queue.push_back({a, s});

  std::vector<RunSummary> results(queue.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < queue.size(); i = next++) {
      try {
        const Job& job = queue[i];
        const RunTrace trace = execute_run(cfg, prob, job.algo, job.seed);
        const std::string file = trace_name(job.algo, job.seed);
        write_trace_csv((out / file).string(), trace.records);
        RunSummary& r = results[i];
        r.algorithm = job.algo;
        r.seed = job.seed;
        r.status = trace.status;
        r.message = trace.message;
        r.epochs = trace.epochs;
        r.updates = trace.updates;
        r.counters = trace.counters;
        r.trace_file = file;
        r.final_W = std::numeric_limits<double>::quiet_NaN();
        r.final_h_sq_norm = std::numeric_limits<double>::quiet_NaN();
        for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it)
          if (std::isfinite(it->W)) {
            r.final_W = it->W;
            r.final_h_sq_norm = it->h_sq_norm;
            break;
          }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(queue.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult res;
  res.runs = std::move(results);
  std::ofstream s(out / "summary.csv");
  s << "algorithm,seed,status,epochs,updates,ce_count,mstep_count,final_W,final_h_sq_norm,trace\n";
  for (const RunSummary& r : res.runs) {
    if (r.status == RunStatus::kDiverged) ++res.diverged;
    s << to_string(r.algorithm) << ',' << r.seed << ',' << to_string(r.status) << ',' << r.epochs
      << ',' << r.updates << ',' << r.counters.ce << ',' << r.counters.mstep << ','
      << format_double(r.final_W) << ',' << format_double(r.final_h_sq_norm) << ','
      << r.trace_file << "\n";
  }
  res.divergence_exceeded =
      static_cast<double>(res.diverged) > cfg.max_diverged_fraction * static_cast<double>(res.runs.size());
  return res;
}

}  // namespace vrem
