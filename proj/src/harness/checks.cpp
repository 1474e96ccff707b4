#include <algorithm>
#include <cmath>
#include <random>

#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/finite_diff.hpp"
#include "vrem/gmm.hpp"
#include "vrem/harness.hpp"
#include "vrem/init.hpp"
#include "vrem/schedule.hpp"

namespace vrem {
namespace {

CheckResult verdict(std::string name, double dev, double tol, std::string detail = {}) {
  return CheckResult{std::move(name), dev <= tol, dev, tol, std::move(detail)};
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<CheckResult> sampler_suite() {
  std::vector<CheckResult> out;
  const RawDataset raw = gen_multivariate_mixture(5, 2, 2, 2.0, 11);
  const Dataset data(raw.values);
  const GmmModel model(2, 2);
  const GmmParameter theta = gmm_init(data, 2, InitMethod::kRandomResponsibility, 3);
  const StatVector full = full_stats(model, data, theta);
  const std::size_t n = 5, b = 2;

  for (SamplingMode mode : {SamplingMode::kWithReplacement, SamplingMode::kWithoutReplacement}) {
    const auto batches = enumerate_batches(n, b, mode);
    StatVector mean = StatVector::Zero(full.size());
    for (const auto& B : batches) mean += minibatch_stats(model, data, B, theta);
    mean /= static_cast<double>(batches.size());
    out.push_back(verdict(std::string("sampler unbiased (") + to_string(mode) + ")",
                          (mean - full).cwiseAbs().maxCoeff(), 1e-12));
  }

  const auto batches = enumerate_batches(n, b, SamplingMode::kWithReplacement);
  const auto q = static_cast<Eigen::Index>(full.size());
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(q, q);
  for (const auto& B : batches) {
    const StatVector d = minibatch_stats(model, data, B, theta) - full;
    var += d * d.transpose();
  }
  var /= static_cast<double>(batches.size());
  Eigen::MatrixXd pop = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < n; ++i) {
    const StatVector d = sbar_i(model, data, i, theta) - full;
    pop += d * d.transpose();
  }
  pop /= static_cast<double>(n * b);
  out.push_back(verdict("with-replacement variance = population variance / b", max_abs(var - pop),
                        1e-12));
  return out;
}

std::vector<CheckResult> equivalence_suite() {
  std::vector<CheckResult> out;
  {
    const RawDataset raw = gen_multivariate_mixture(500, 12, 5, 4.0, 21);
    const Dataset data(raw.values);
    const GmmModel model(12, 5);
    const StatVector s0 =
        full_stats(model, data, gmm_init(data, 12, InitMethod::kKmeansSeed, 22));
    const auto sched = StepSchedule::constant(5e-3);
    RunOptions opts;
    opts.cadence = MetricCadence::kNone;
    opts.store_snapshots = true;
    MinibatchSampler s1(500, 25, SamplingMode::kWithReplacement, 23);
    MinibatchSampler s2(500, 25, SamplingMode::kWithReplacement, 23);
    const RunTrace a = run_spider_em(model, data, s0, s1, sched, 3, 20, opts);
    const RunTrace c = run_spider_em_cv(model, data, s0, s2, sched, 3, 20, opts);
    double dev = 0.0;
    std::string detail;
    if (a.snapshots.size() != c.snapshots.size() || a.status != RunStatus::kCompleted ||
        c.status != RunStatus::kCompleted) {
      dev = std::numeric_limits<double>::infinity();
      detail = "runs did not complete with matching iterate counts";
    } else {
      for (std::size_t i = 0; i < a.snapshots.size(); ++i)
        dev = std::max(dev, (a.snapshots[i].state - c.snapshots[i].state).cwiseAbs().maxCoeff());
      detail = std::to_string(a.snapshots.size()) + " iterates";
    }
    out.push_back(verdict("spider-em = spider-em-cv", dev, 1e-10, detail));
  }
  {
    const std::size_t n = 200;
    const RawDataset raw = gen_multivariate_mixture(n, 3, 2, 3.0, 31);
    const Dataset data(raw.values);
    const GmmModel model(3, 2);
    const StatVector s0 =
        full_stats(model, data, gmm_init(data, 3, InitMethod::kKmeansSeed, 32));
    const auto one = StepSchedule::constant(1.0);
    RunOptions opts;
    opts.cadence = MetricCadence::kNone;
    opts.store_snapshots = true;
    const std::uint64_t iters = 20;
    const RunTrace em = run_em(model, data, s0, iters + 1, opts);
    // EM iterate k sits at snapshot index k + 1 (index 0 holds s_init).
    auto em_at = [&](std::uint64_t k) -> const StatVector& { return em.snapshots.at(k + 1).state; };

    MinibatchSampler so(n, n, SamplingMode::kWithoutReplacement, 33);
    const RunTrace on = run_online_em(model, data, s0, so, one, iters, opts);
    double dev = 0.0;
    for (std::uint64_t k = 0; k <= iters; ++k)
      dev = std::max(dev, (on.snapshots.at(k + 1).state - em_at(k)).cwiseAbs().maxCoeff());
    out.push_back(verdict("online-em (b = n, gamma = 1) = em", dev, 1e-12));

    for (Algorithm algo : {Algorithm::kSemVr, Algorithm::kSpiderEm}) {
      MinibatchSampler sv(n, n, SamplingMode::kWithoutReplacement, 34);
      const std::uint64_t k_in = 5, k_out = iters / k_in;
      const RunTrace tr = algo == Algorithm::kSemVr
                              ? run_sem_vr(model, data, s0, sv, one, k_out, k_in, opts)
                              : run_spider_em(model, data, s0, sv, one, k_out, k_in, opts);
      double d = 0.0;
      for (const Snapshot& snap : tr.snapshots)
        if (snap.tau >= 1)
          d = std::max(d, (snap.state - em_at(static_cast<std::uint64_t>(snap.tau) - 1))
                              .cwiseAbs()
                              .maxCoeff());
      out.push_back(verdict(std::string(to_string(algo)) + " (b = n, gamma = 1) = em", d, 1e-12));
    }
  }
  return out;
}

std::vector<CheckResult> gradient_suite() {
  const std::size_t g = 3, p = 2;
  const RawDataset raw = gen_multivariate_mixture(300, g, p, 2.5, 41);
  const Dataset data(raw.values);
  const GmmModel model(g, p);
  std::mt19937_64 rng(42);
  double worst_rel = 0.0, worst_asym = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const GmmParameter theta =
        gmm_init(data, g, InitMethod::kRandomResponsibility, rng());
    const StatVector s = full_stats(model, data, theta);
    const Eigen::VectorXd grad = fd_gradient_objective(model, data, s);
    const JacobianEstimate jac = fd_jacobian_phiT(model, data, s);
    const Eigen::VectorXd bh = jac.symmetric * mean_field(model, data, s);
    worst_rel = std::max(worst_rel, (grad + bh).norm() / bh.norm());
    worst_asym = std::max(worst_asym, jac.asymmetry);
  }
  return {verdict("gradient identity", worst_rel, 1e-3, "10 admissible points"),
          verdict("jacobian asymmetry", worst_asym, 1e-4)};
}

}  // namespace

std::vector<CheckResult> run_check_suite(const std::string& suite) {
  std::vector<CheckResult> out;
  auto add = [&](std::vector<CheckResult> r) { out.insert(out.end(), r.begin(), r.end()); };
  if (suite == "sampler" || suite == "all") add(sampler_suite());
  if (suite == "equivalence" || suite == "all") add(equivalence_suite());
  if (suite == "gradient" || suite == "all") add(gradient_suite());
  if (out.empty()) throw ArgumentError("unknown check suite '" + suite + "'");
  return out;
}

}  // namespace vrem
