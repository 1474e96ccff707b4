#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/gmm.hpp"
#include "vrem/harness.hpp"
#include "vrem/init.hpp"
#include "vrem/schedule.hpp"

namespace vrem {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return quantile(std::move(v), 0.5);
}

struct TrialSpec {
  std::size_t n;
  std::size_t b;
  std::uint64_t k_in;
  std::uint64_t data_seed;
  std::uint64_t run_seed;
};

ComplexityTrial run_trial(const ComplexitySettings& st, const TrialSpec& ts) {
  const RawDataset raw = gen_scalar_mixture(ts.n, st.weights.at(0), st.weights.at(1),
                                            st.means.at(0), st.means.at(1), st.variance,
                                            ts.data_seed);
  const Dataset data(raw.values);
  const ScalarTwoGmmModel model(st.weights.at(0));
  const StatVector s_init = full_stats(model, data, scalar2_default_init());

  MinibatchSampler sampler(ts.n, ts.b, st.sampling, derive_seed(ts.run_seed, 0));
  MinibatchSampler sampler_prime(ts.n, ts.b, st.sampling, derive_seed(ts.run_seed, 1));
  AlgorithmSetup setup;
  setup.algorithm = st.algorithm;
  setup.sampler = st.algorithm == Algorithm::kEm ? nullptr : &sampler;
  setup.sampler_prime = &sampler_prime;
  setup.xi = uniform_xi(derive_seed(ts.run_seed, 2));
  setup.schedule = StepSchedule::constant(st.gamma);
  switch (st.algorithm) {
    case Algorithm::kEm:
      setup.k_max = st.cap_epochs;
      break;
    case Algorithm::kOnlineEm:
    case Algorithm::kIem:
    case Algorithm::kFiem:
      setup.k_max = ceil_div(st.cap_epochs * ts.n, ts.b);
      break;
    default:
      setup.k_in = ts.k_in;
      setup.k_out = std::max<std::uint64_t>(1, st.cap_epochs / 2);
      break;
  }

  ComplexityTrial trial{false, 0, 0, 0};
  const bool nested_formula =
      st.algorithm == Algorithm::kSpiderEm || st.algorithm == Algorithm::kSpiderEmCv ||
      st.algorithm == Algorithm::kSemVr;
  std::uint64_t updates = 0;
  RunOptions opts;
  opts.cadence = MetricCadence::kNone;
  opts.on_iterate = [&](const IterateEvent& ev) {
    if (ev.kind != EventKind::kUpdate) return true;
    ++updates;
    const double h2 = std::isinf(st.epsilon) ? 0.0 : mean_field(model, data, ev.state).squaredNorm();
    if (h2 <= st.epsilon) {
      trial.hit = true;
      trial.tau_emp = updates;
      trial.t_emp = nested_formula ? updates / ts.k_in : 0;
      trial.k_ce = nested_formula ? ts.n * trial.t_emp + 2 * ts.b * trial.tau_emp
                                 : ev.counters.ce - ts.n;
      return false;
    }
    return ev.epoch < st.cap_epochs;
  };
  run_algorithm(model, data, s_init, setup, opts);
  return trial;
}

}  // namespace

ComplexityEstimate estimate_complexity(const ComplexitySettings& st,
                                       const std::vector<std::size_t>& n_grid, unsigned jobs) {
  if (!(st.epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
  if (st.trials < 1) throw ArgumentError("trials must be >= 1");
  if (n_grid.empty()) throw ArgumentError("empty n grid");

  std::vector<TrialSpec> specs;
  ComplexityEstimate est;
  for (std::size_t n : n_grid) {
    if (n == 0) throw ArgumentError("n must be >= 1");
    ComplexityPoint pt;
    pt.n = n;
    pt.b = st.b ? st.b
                : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)) / 20.0));
    pt.b = std::max<std::size_t>(pt.b, 1);
    pt.k_in = st.k_in ? st.k_in : ceil_div(n, pt.b);
    if (is_nested(st.algorithm) && pt.k_in < 2) pt.k_in = 2;
    pt.trials = st.trials;
    est.points.push_back(pt);
    const std::uint64_t base = derive_seed(st.seed, n);
    for (std::size_t r = 0; r < st.trials; ++r)
      specs.push_back({n, pt.b, pt.k_in, derive_seed(base, 2 * r), derive_seed(base, 2 * r + 1)});
  }

  std::vector<ComplexityTrial> results(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      if (failed) return;
      try {
        results[i] = run_trial(st, specs[i]);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  std::size_t i = 0;
  for (ComplexityPoint& pt : est.points) {
    std::vector<double> k_opt, k_ce;
    for (std::size_t r = 0; r < st.trials; ++r, ++i) {
      pt.raw.push_back(results[i]);
      if (results[i].hit) {
        k_opt.push_back(static_cast<double>(results[i].tau_emp));
        k_ce.push_back(static_cast<double>(results[i].k_ce));
      }
    }
    pt.hit_rate = static_cast<double>(k_opt.size()) / static_cast<double>(st.trials);
    pt.median_k_opt = median(k_opt);
    pt.median_k_ce = median(k_ce);
  }
  return est;
}

void write_complexity_csv(std::ostream& os, const ComplexityEstimate& est) {
  os << "n,b,k_in,trials,hit_rate,median_k_opt,median_k_ce_minus_n\n";
  for (const auto& pt : est.points)
    os << pt.n << ',' << pt.b << ',' << pt.k_in << ',' << pt.trials << ','
       << format_double(pt.hit_rate) << ',' << format_double(pt.median_k_opt) << ','
       << format_double(pt.median_k_ce) << "\n";
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("need >= 2 matching points");
  double mx = 0, my = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw ArgumentError("log-log fit needs positive values");
    mx += std::log(x[i]) / m;
    my += std::log(y[i]) / m;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw ArgumentError("x values must not all be equal");
  return sxy / sxx;
}

}  // namespace vrem
