#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "support.hpp"
#include "vrem/accounting.hpp"
#include "vrem/algorithms.hpp"
#include "vrem/em_core.hpp"
#include "vrem/errors.hpp"
#include "vrem/gmm.hpp"
#include "vrem/init.hpp"

using namespace vrem;

namespace {

RunOptions snapshots_only() {
  RunOptions o;
  o.cadence = MetricCadence::kNone;
  o.store_snapshots = true;
  return o;
}

struct Fixture {
  Dataset data;
  GmmModel model;
  StatVector s0;

  Fixture(std::size_t n, std::size_t g, std::size_t p, double sep, std::uint64_t seed)
      : data(testing::mixture_dataset(n, g, p, sep, seed)),
        model(g, p),
        s0(full_stats(model, data, gmm_init(data, g, InitMethod::kKmeansSeed, seed + 1))) {}
};

const StatVector& at_tau(const RunTrace& tr, std::int64_t tau) {
  for (const auto& snap : tr.snapshots)
    if (snap.tau == tau && snap.k >= 0) return snap.state;
  throw std::runtime_error("missing snapshot");
}

double max_dev(const RunTrace& a, const RunTrace& b) {
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i)
    d = std::max(d, testing::max_abs_diff(a.snapshots[i].state, b.snapshots[i].state));
  return d;
}

// Runs `draw(seed)` over increasing seeds until every batch of `all` has been
// seen, keeping the first result per batch, and returns their plain average.
template <class Draw>
StatVector enumerate_average(const std::vector<std::vector<std::size_t>>& all, Draw draw) {
  std::map<std::vector<std::size_t>, StatVector> seen;
  for (std::uint64_t seed = 0; seen.size() < all.size(); ++seed) {
    REQUIRE(seed < 100000);
    auto [batch, value] = draw(seed);
    seen.emplace(std::move(batch), std::move(value));
  }
  StatVector acc = StatVector::Zero(seen.begin()->second.size());
  for (const auto& b : all) acc += seen.at(b);
  return acc / static_cast<double>(all.size());
}

// Batch returned by the `call`-th next() of a sampler with this seed.
std::vector<std::size_t> nth_batch(std::size_t n, std::size_t b, SamplingMode mode,
                                   std::uint64_t seed, int call) {
  MinibatchSampler s(n, b, mode, seed);
  for (int i = 1; i < call; ++i) s.next();
  return s.next();
}

}  // namespace

TEST_CASE("batch EM") {
  SUBCASE("monotone objective") {
    Fixture f(400, 3, 2, 2.0, 3);
    RunOptions o;
    o.cadence = MetricCadence::kEveryIteration;
    const auto tr = run_em(f.model, f.data, f.s0, 60, o);
    CHECK(tr.status == RunStatus::kCompleted);
    for (std::size_t i = 1; i < tr.records.size(); ++i)
      CHECK(tr.records[i].W <= tr.records[i - 1].W + 1e-10);
  }

  SUBCASE("a fixed point stays put") {
    Fixture f(300, 2, 2, 6.0, 5);
    StatVector s = f.s0;
    for (int k = 0; k < 3000; ++k) s += mean_field(f.model, f.data, s);
    REQUIRE(mean_field(f.model, f.data, s).norm() <= 1e-13);
    const auto tr = run_em(f.model, f.data, s, 10, snapshots_only());
    for (const auto& snap : tr.snapshots) CHECK(testing::max_abs_diff(snap.state, s) <= 1e-13);
  }

  SUBCASE("scalar mixture converges within 100 iterations") {
    const Dataset data(gen_scalar_mixture(2000, 0.2, 0.8, 2.5, -2.5, 1.0, 7).values);
    const ScalarTwoGmmModel model(0.2);
    const StatVector s_init = full_stats(model, data, scalar2_default_init());
    const auto tr = run_em(model, data, s_init, 100, snapshots_only());
    CHECK(mean_field(model, data, tr.final_state).squaredNorm() <= 1e-12);
  }

  SUBCASE("one update per iteration, each a full pass") {
    Fixture f(120, 2, 2, 4.0, 9);
    const auto tr = run_em(f.model, f.data, f.s0, 7);
    CHECK(tr.updates == 7);
    CHECK(tr.epochs == 7);
    CHECK(tr.counters.ce == 120 + 120 * 7);
    CHECK(tr.counters.mstep == 8);
  }
}

TEST_CASE("Online EM") {
  Fixture f(60, 2, 2, 4.0, 11);

  SUBCASE("b = n without replacement and unit steps is batch EM") {
    MinibatchSampler smp(60, 60, SamplingMode::kWithoutReplacement, 1);
    const auto on = run_online_em(f.model, f.data, f.s0, smp, StepSchedule::constant(1.0), 15,
                                  snapshots_only());
    const auto em = run_em(f.model, f.data, f.s0, 15, snapshots_only());
    CHECK(max_dev(on, em) <= 1e-12);
  }

  SUBCASE("zero step keeps the initial iterate") {
    MinibatchSampler smp(60, 5, SamplingMode::kWithReplacement, 2);
    const auto tr = run_online_em(f.model, f.data, f.s0, smp, StepSchedule::constant(0.0), 20,
                                  snapshots_only());
    const StatVector first = full_stats(f.model, f.data, *m_step(f.model, f.data, f.s0));
    for (std::size_t i = 1; i < tr.snapshots.size(); ++i)
      CHECK(tr.snapshots[i].state == first);
  }

  SUBCASE("the mean step over all batches is a damped EM step") {
    Fixture tiny(5, 2, 2, 3.0, 13);
    const double gamma = 0.3;
    const auto all = enumerate_batches(5, 2, SamplingMode::kWithReplacement);
    const StatVector mean = enumerate_average(all, [&](std::uint64_t seed) {
      MinibatchSampler smp(5, 2, SamplingMode::kWithReplacement, seed);
      const auto tr = run_online_em(tiny.model, tiny.data, tiny.s0, smp,
                                    StepSchedule::constant(gamma), 1, snapshots_only());
      return std::make_pair(nth_batch(5, 2, SamplingMode::kWithReplacement, seed, 1),
                            tr.final_state);
    });
    const StatVector s_hat0 = full_stats(tiny.model, tiny.data, *m_step(tiny.model, tiny.data, tiny.s0));
    const StatVector expect = s_hat0 + gamma * mean_field(tiny.model, tiny.data, s_hat0);
    CHECK(testing::max_abs_diff(mean, expect) <= 1e-12);
  }
}

TEST_CASE("iEM") {
  SUBCASE("b = n without replacement and unit steps is batch EM") {
    Fixture f(50, 2, 2, 4.0, 15);
    MinibatchSampler smp(50, 50, SamplingMode::kWithoutReplacement, 3);
    const auto ie = run_iem(f.model, f.data, f.s0, smp, StepSchedule::constant(1.0), 12,
                            snapshots_only());
    const auto em = run_em(f.model, f.data, f.s0, 12, snapshots_only());
    CHECK(max_dev(ie, em) <= 1e-12);
  }

  SUBCASE("three points, two iterations, against a hand-run store") {
    const std::vector<double> ys{0.8, -1.3, 2.1};
    const auto data = testing::scalar_dataset(ys);
    const ScalarTwoGmmModel model(0.2);
    const StatVector s_init = full_stats(model, data, scalar2_default_init());
    const double gamma = 0.6;
    MinibatchSampler smp(3, 1, SamplingMode::kWithReplacement, 21);
    const auto tr =
        run_iem(model, data, s_init, smp, StepSchedule::constant(gamma), 2, snapshots_only());

    std::vector<StatVector> store;
    const auto th0 = m_step(model, data, s_init);
    for (std::size_t i = 0; i < 3; ++i) store.push_back(sbar_i(model, data, i, *th0));
    auto store_mean = [&] { return StatVector((store[0] + store[1] + store[2]) / 3.0); };
    StatVector s = store_mean();
    CHECK(testing::max_abs_diff(tr.snapshots.at(1).state, s) <= 1e-15);
    for (int k = 1; k <= 2; ++k) {
      const auto th = m_step(model, data, s);
      const std::size_t i = nth_batch(3, 1, SamplingMode::kWithReplacement, 21, k)[0];
      store[i] = sbar_i(model, data, i, *th);
      s += gamma * (store_mean() - s);
      CHECK(testing::max_abs_diff(tr.snapshots.at(1 + k).state, s) <= 1e-15);
    }
  }

  SUBCASE("with unit steps the iterate is the store mean") {
    Fixture f(40, 2, 2, 3.0, 17);
    MinibatchSampler smp(40, 3, SamplingMode::kWithReplacement, 4);
    MinibatchSampler replay(40, 3, SamplingMode::kWithReplacement, 4);
    const auto tr = run_iem(f.model, f.data, f.s0, smp, StepSchedule::constant(1.0), 30,
                            snapshots_only());
    std::vector<std::size_t> all(40);
    std::iota(all.begin(), all.end(), 0);
    Eigen::MatrixXd store =
        per_sample_stats(f.model, f.data, all, *m_step(f.model, f.data, f.s0));
    for (std::size_t k = 1; k <= 30; ++k) {
      const auto th = m_step(f.model, f.data, tr.snapshots.at(k).state);
      for (std::size_t i : replay.next())
        store.col(static_cast<Eigen::Index>(i)) = sbar_i(f.model, f.data, i, *th);
      const StatVector exact = store.rowwise().mean();
      CHECK(testing::max_abs_diff(tr.snapshots.at(k + 1).state, exact) <= 1e-10);
    }
  }

  SUBCASE("memory cap") {
    Fixture f(40, 2, 2, 3.0, 17);
    MinibatchSampler smp(40, 3, SamplingMode::kWithReplacement, 4);
    RunOptions o;
    o.memory_cap_bytes = 100;
    CHECK_THROWS_AS(run_iem(f.model, f.data, f.s0, smp, StepSchedule::constant(1.0), 3, o),
                    ArgumentError);
  }
}

TEST_CASE("FIEM") {
  SUBCASE("zero step keeps the iterate") {
    Fixture f(30, 2, 2, 3.0, 19);
    MinibatchSampler a(30, 4, SamplingMode::kWithReplacement, 1), b(30, 4, SamplingMode::kWithReplacement, 2);
    const auto tr = run_fiem(f.model, f.data, f.s0, a, b, StepSchedule::constant(0.0), 10,
                             snapshots_only());
    for (std::size_t i = 2; i < tr.snapshots.size(); ++i)
      CHECK(tr.snapshots[i].state == tr.snapshots[1].state);
    CHECK(tr.counters.ce == 30 + 2 * 4 * 10);
  }

  SUBCASE("the mean step over the second batch is a damped EM step") {
    Fixture tiny(4, 2, 2, 3.0, 23);
    const double gamma = 0.4;
    const auto all = enumerate_batches(4, 1, SamplingMode::kWithReplacement);
    // B_1, B_2 come from a fixed stream and B'_1 is held at seed 0's draw, so
    // the state after one step is fixed; average the second step over B'_2.
    const auto first = nth_batch(4, 1, SamplingMode::kWithReplacement, 0, 1);
    std::map<std::vector<std::size_t>, StatVector> by_second;
    StatVector anchor;
    for (std::uint64_t seed = 0; by_second.size() < all.size(); ++seed) {
      REQUIRE(seed < 100000);
      if (nth_batch(4, 1, SamplingMode::kWithReplacement, seed, 1) != first) continue;
      MinibatchSampler a(4, 1, SamplingMode::kWithReplacement, 1000);
      MinibatchSampler b(4, 1, SamplingMode::kWithReplacement, seed);
      const auto tr = run_fiem(tiny.model, tiny.data, tiny.s0, a, b,
                               StepSchedule::constant(gamma), 2, snapshots_only());
      anchor = tr.snapshots.at(2).state;
      by_second.emplace(nth_batch(4, 1, SamplingMode::kWithReplacement, seed, 2), tr.final_state);
    }
    StatVector avg = StatVector::Zero(anchor.size());
    for (const auto& kv : by_second) avg += kv.second;
    avg /= static_cast<double>(by_second.size());
    const StatVector expect = anchor + gamma * mean_field(tiny.model, tiny.data, anchor);
    CHECK(testing::max_abs_diff(avg, expect) <= 1e-12);
  }

  SUBCASE("three points, two iterations, against a hand-run store") {
    const std::vector<double> ys{0.8, -1.3, 2.1};
    const auto data = testing::scalar_dataset(ys);
    const ScalarTwoGmmModel model(0.2);
    const StatVector s_init = full_stats(model, data, scalar2_default_init());
    const double gamma = 0.5;
    MinibatchSampler a(3, 1, SamplingMode::kWithReplacement, 5);
    MinibatchSampler b(3, 1, SamplingMode::kWithReplacement, 6);
    const auto tr =
        run_fiem(model, data, s_init, a, b, StepSchedule::constant(gamma), 2, snapshots_only());

    std::vector<StatVector> store;
    const auto th0 = m_step(model, data, s_init);
    for (std::size_t i = 0; i < 3; ++i) store.push_back(sbar_i(model, data, i, *th0));
    StatVector s = (store[0] + store[1] + store[2]) / 3.0;
    for (int k = 1; k <= 2; ++k) {
      const auto th = m_step(model, data, s);
      const std::size_t i = nth_batch(3, 1, SamplingMode::kWithReplacement, 5, k)[0];
      const std::size_t j = nth_batch(3, 1, SamplingMode::kWithReplacement, 6, k)[0];
      store[i] = sbar_i(model, data, i, *th);
      const StatVector mean = (store[0] + store[1] + store[2]) / 3.0;
      const StatVector v = mean - store[j];
      s += gamma * (sbar_i(model, data, j, *th) - s + v);
      CHECK(testing::max_abs_diff(tr.snapshots.at(1 + k).state, s) <= 1e-15);
    }
  }
}

TEST_CASE("sEM-vr") {
  SUBCASE("b = n without replacement gives damped EM steps") {
    Fixture f(40, 2, 2, 3.0, 29);
    const double gamma = 0.35;
    MinibatchSampler smp(40, 40, SamplingMode::kWithoutReplacement, 8);
    const auto tr = run_sem_vr(f.model, f.data, f.s0, smp, StepSchedule::constant(gamma), 3, 4,
                               snapshots_only());
    for (std::size_t i = 2; i < tr.snapshots.size(); ++i) {
      const StatVector& prev = tr.snapshots[i - 1].state;
      const StatVector expect = prev + gamma * mean_field(f.model, f.data, prev);
      CHECK(testing::max_abs_diff(tr.snapshots[i].state, expect) <= 1e-12);
    }
  }

  SUBCASE("the control variate has zero mean") {
    Fixture tiny(5, 2, 2, 3.0, 31);
    const double gamma = 0.4;
    const auto all = enumerate_batches(5, 2, SamplingMode::kWithReplacement);
    StatVector s1;
    const StatVector mean = enumerate_average(all, [&](std::uint64_t seed) {
      MinibatchSampler smp(5, 2, SamplingMode::kWithReplacement, seed);
      const auto tr = run_sem_vr(tiny.model, tiny.data, tiny.s0, smp,
                                 StepSchedule::constant(gamma), 1, 3, snapshots_only());
      s1 = at_tau(tr, 1);
      return std::make_pair(nth_batch(5, 2, SamplingMode::kWithReplacement, seed, 2),
                            StatVector(at_tau(tr, 2)));
    });
    CHECK(testing::max_abs_diff(mean, s1 + gamma * mean_field(tiny.model, tiny.data, s1)) <=
          1e-12);
  }

  SUBCASE("two outer by three inner on four points against a hand run") {
    Fixture f(4, 2, 2, 3.0, 37);
    const double gamma = 0.3;
    MinibatchSampler smp(4, 2, SamplingMode::kWithReplacement, 12);
    MinibatchSampler replay(4, 2, SamplingMode::kWithReplacement, 12);
    const auto tr = run_sem_vr(f.model, f.data, f.s0, smp, StepSchedule::constant(gamma), 2, 3,
                               snapshots_only());
    std::vector<StatVector> expect{f.s0};
    StatVector s = f.s0;
    StatVector anchor = f.s0;
    for (int t = 1; t <= 2; ++t) {
      const auto th_a = m_step(f.model, f.data, anchor);
      const StatVector full = full_stats(f.model, f.data, *th_a);
      for (int k = 0; k < 2; ++k) {
        const auto& b = replay.next();
        const auto th = m_step(f.model, f.data, s);
        s += gamma * (minibatch_stats(f.model, f.data, b, *th) - s + full -
                      minibatch_stats(f.model, f.data, b, *th_a));
        expect.push_back(s);
      }
      anchor = s;
      s += gamma * (full_stats(f.model, f.data, *m_step(f.model, f.data, s)) - s);
      expect.push_back(s);
    }
    REQUIRE(tr.snapshots.size() == expect.size() + 1);
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(testing::max_abs_diff(tr.snapshots[i + 1].state, expect[i]) <= 1e-14);
  }
}

TEST_CASE("SPIDER-EM") {
  SUBCASE("equivalent to the control-variate form") {
    Fixture f(500, 12, 5, 4.0, 41);
    MinibatchSampler a(500, 25, SamplingMode::kWithReplacement, 9);
    MinibatchSampler b(500, 25, SamplingMode::kWithReplacement, 9);
    const auto sched = StepSchedule::constant(5e-3);
    const auto x = run_spider_em(f.model, f.data, f.s0, a, sched, 3, 20, snapshots_only());
    const auto y = run_spider_em_cv(f.model, f.data, f.s0, b, sched, 3, 20, snapshots_only());
    CHECK(x.status == RunStatus::kCompleted);
    CHECK(max_dev(x, y) <= 1e-10);
  }

  SUBCASE("full batch with unit steps telescopes to batch EM") {
    Fixture f(80, 3, 2, 3.0, 43);
    const auto em = run_em(f.model, f.data, f.s0, 20, snapshots_only());
    for (auto algo : {Algorithm::kSpiderEm, Algorithm::kSpiderEmCv, Algorithm::kSemVr}) {
      MinibatchSampler smp(80, 80, SamplingMode::kWithoutReplacement, 10);
      AlgorithmSetup setup;
      setup.algorithm = algo;
      setup.k_out = 4;
      setup.k_in = 5;
      setup.sampler = &smp;
      setup.schedule = StepSchedule::constant(1.0);
      const auto tr = run_algorithm(f.model, f.data, f.s0, setup, snapshots_only());
      double dev = 0.0;
      for (const auto& snap : tr.snapshots)
        if (snap.tau >= 1)
          dev = std::max(dev, testing::max_abs_diff(snap.state,
                                                    em.snapshots.at(snap.tau).state));
      CHECK(dev <= 1e-12);
    }
  }

  SUBCASE("the inner update is unbiased") {
    Fixture tiny(5, 2, 2, 3.0, 47);
    const double gamma = 0.5;
    const auto all = enumerate_batches(5, 2, SamplingMode::kWithReplacement);
    for (auto algo : {Algorithm::kSpiderEm, Algorithm::kSpiderEmCv}) {
      StatVector s1;
      const StatVector mean = enumerate_average(all, [&](std::uint64_t seed) {
        MinibatchSampler smp(5, 2, SamplingMode::kWithReplacement, seed);
        AlgorithmSetup setup;
        setup.algorithm = algo;
        setup.k_out = 1;
        setup.k_in = 3;
        setup.sampler = &smp;
        setup.schedule = StepSchedule::constant(gamma);
        const auto tr = run_algorithm(tiny.model, tiny.data, tiny.s0, setup, snapshots_only());
        s1 = at_tau(tr, 1);
        return std::make_pair(nth_batch(5, 2, SamplingMode::kWithReplacement, seed, 2),
                              StatVector(at_tau(tr, 2)));
      });
      CHECK(testing::max_abs_diff(mean, s1 + gamma * mean_field(tiny.model, tiny.data, s1)) <=
            1e-12);
    }
  }

  SUBCASE("increments of the control variate have zero mean") {
    // V_{t,k+1} - V_{t,k} = sbar(T(S_{t,k-1})) - sbar_B(T(S_{t,k-1})) at k = 1
    Fixture tiny(5, 2, 2, 3.0, 53);
    const auto theta = m_step(tiny.model, tiny.data, tiny.s0);
    const StatVector full = full_stats(tiny.model, tiny.data, *theta);
    StatVector acc = StatVector::Zero(full.size());
    const auto all = enumerate_batches(5, 2, SamplingMode::kWithReplacement);
    for (const auto& b : all) acc += full - minibatch_stats(tiny.model, tiny.data, b, *theta);
    CHECK(acc.cwiseAbs().maxCoeff() / static_cast<double>(all.size()) <= 1e-15);
  }

  SUBCASE("k_in = 2 runs one inner step per outer loop") {
    Fixture f(50, 2, 2, 3.0, 59);
    MinibatchSampler smp(50, 5, SamplingMode::kWithReplacement, 1);
    const auto tr = run_spider_em_cv(f.model, f.data, f.s0, smp, StepSchedule::constant(0.1), 6,
                                     2, snapshots_only());
    CHECK(tr.updates == 12);
    const auto cf = closed_form_counters(Algorithm::kSpiderEmCv, 50, 5, 0, 6, 2);
    CHECK(tr.counters.ce == cf.ce);
    CHECK(tr.counters.mstep == cf.mstep);
    CHECK(cf.ce == 50 + 6 * (50 + 2 * 5));
  }

  SUBCASE("k_in below 2 is rejected") {
    Fixture f(20, 2, 2, 3.0, 61);
    MinibatchSampler smp(20, 2, SamplingMode::kWithReplacement, 1);
    CHECK_THROWS_AS(run_spider_em(f.model, f.data, f.s0, smp, StepSchedule::constant(0.1), 2, 1),
                    ArgumentError);
  }

  SUBCASE("synthetic scalar configuration reaches the target") {
    const std::size_t n = 10000;
    const Dataset data(gen_scalar_mixture(n, 0.2, 0.8, 0.5, -0.5, 1.0, 3).values);
    const ScalarTwoGmmModel model(0.2);
    const StatVector s_init = full_stats(model, data, scalar2_default_init());
    const auto b = static_cast<std::size_t>(std::ceil(std::sqrt(double(n)) / 20.0));
    const std::uint64_t k_in = (n + b - 1) / b;
    MinibatchSampler smp(n, b, SamplingMode::kWithReplacement, 4);
    double best = INFINITY;
    RunOptions o;
    o.cadence = MetricCadence::kNone;
    o.on_iterate = [&](const IterateEvent& ev) {
      best = std::min(best, mean_field(model, data, ev.state).squaredNorm());
      return best > 2.5e-5;
    };
    const auto tr =
        run_spider_em(model, data, s_init, smp, StepSchedule::constant(0.01), 200, k_in, o);
    CHECK(best <= 2.5e-5);
    CHECK(tr.status == RunStatus::kStopped);
  }
}

TEST_CASE("SPIDER-EM-PL") {
  Fixture f(300, 3, 2, 5.0, 67);
  const std::uint64_t k_in = 6;
  const auto sched = StepSchedule::constant(0.2);
  const XiSource longest = [](std::uint64_t k) { return k - 1; };

  SUBCASE("full-length loops without the outer damping match SPIDER-EM") {
    MinibatchSampler a(300, 10, SamplingMode::kWithReplacement, 2);
    MinibatchSampler b(300, 10, SamplingMode::kWithReplacement, 2);
    const auto pl = run_spider_em_pl(f.model, f.data, f.s0, a, sched, 4, k_in, longest,
                                     snapshots_only());
    RunOptions o = snapshots_only();
    o.outer_step = 0.0;
    const auto sp = run_spider_em(f.model, f.data, f.s0, b, sched, 4, k_in, o);
    CHECK(max_dev(pl, sp) == 0.0);
  }

  SUBCASE("with the default outer step only the outer update differs") {
    MinibatchSampler a(300, 10, SamplingMode::kWithReplacement, 2);
    MinibatchSampler b(300, 10, SamplingMode::kWithReplacement, 2);
    const auto pl = run_spider_em_pl(f.model, f.data, f.s0, a, sched, 2, k_in, longest,
                                     snapshots_only());
    const auto sp = run_spider_em(f.model, f.data, f.s0, b, sched, 2, k_in, snapshots_only());
    REQUIRE(pl.snapshots.size() == sp.snapshots.size());
    // s_init, (1,0) and the first inner loop agree
    for (std::size_t i = 0; i < k_in + 1; ++i)
      CHECK(pl.snapshots[i].state == sp.snapshots[i].state);
    const StatVector& last = pl.snapshots[k_in].state;
    CHECK(pl.snapshots[k_in + 1].state == last);
    const StatVector damped = last + 0.2 * mean_field(f.model, f.data, last);
    CHECK(testing::max_abs_diff(sp.snapshots[k_in + 1].state, damped) <= 1e-14);
  }

  SUBCASE("per-loop cost is n + 2 b xi") {
    MinibatchSampler a(300, 10, SamplingMode::kWithReplacement, 3);
    std::vector<std::uint64_t> xis;
    const auto base = uniform_xi(77);
    const XiSource recorded = [&](std::uint64_t k) {
      xis.push_back(base(k));
      return xis.back();
    };
    std::vector<std::uint64_t> ce_at_restart{300};
    RunOptions o;
    o.cadence = MetricCadence::kNone;
    o.on_iterate = [&](const IterateEvent& ev) {
      if (ev.kind == EventKind::kRestart) ce_at_restart.push_back(ev.counters.ce);
      return true;
    };
    const auto tr = run_spider_em_pl(f.model, f.data, f.s0, a, sched, 8, k_in, recorded, o);
    REQUIRE(xis.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) {
      CHECK(xis[t] >= 1);
      CHECK(xis[t] <= k_in - 1);
      CHECK(ce_at_restart[t + 1] - ce_at_restart[t] == 300 + 2 * 10 * xis[t]);
    }
    const auto cf = closed_form_counters_pl(300, 10, xis);
    CHECK(tr.counters.ce == cf.ce);
    CHECK(tr.counters.mstep == cf.mstep);
  }

  SUBCASE("xi outside its range is rejected") {
    MinibatchSampler a(300, 10, SamplingMode::kWithReplacement, 3);
    const XiSource bad = [](std::uint64_t k) { return k; };
    CHECK_THROWS_AS(run_spider_em_pl(f.model, f.data, f.s0, a, sched, 2, k_in, bad),
                    ArgumentError);
  }

  SUBCASE("objective gap decays geometrically across outer loops") {
    Fixture sep(1000, 3, 2, 8.0, 71);
    StatVector star = sep.s0;
    for (int k = 0; k < 2000; ++k) star += mean_field(sep.model, sep.data, star);
    const double w_star = objective(sep.model, sep.data, star);
    MinibatchSampler a(1000, 20, SamplingMode::kWithReplacement, 5);
    std::vector<double> gaps;
    RunOptions o;
    o.cadence = MetricCadence::kNone;
    o.on_iterate = [&](const IterateEvent& ev) {
      if (ev.kind == EventKind::kRestart)
        gaps.push_back(objective(sep.model, sep.data, ev.state) - w_star);
      return true;
    };
    run_spider_em_pl(sep.model, sep.data, sep.s0, a, StepSchedule::constant(0.5), 12, 51,
                     uniform_xi(6), o);
    std::vector<double> ratios;
    for (std::size_t i = 1; i < gaps.size(); ++i)
      if (gaps[i - 1] > 1e-11) ratios.push_back(gaps[i] / gaps[i - 1]);
    REQUIRE(ratios.size() >= 3);
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    CHECK(ratios[ratios.size() / 2] <= 0.95);
  }
}

TEST_CASE("hybrid warm start") {
  Fixture f(200, 3, 2, 4.0, 73);
  const auto warm_sched = StepSchedule::constant(0.05);

  auto spider_setup = [](MinibatchSampler& smp) {
    AlgorithmSetup s;
    s.algorithm = Algorithm::kSpiderEm;
    s.k_out = 3;
    s.k_in = 11;
    s.sampler = &smp;
    s.schedule = StepSchedule::constant(0.05);
    return s;
  };

  SUBCASE("no warm epochs is the wrapped algorithm alone") {
    MinibatchSampler w(200, 20, SamplingMode::kWithReplacement, 1);
    MinibatchSampler a(200, 20, SamplingMode::kWithReplacement, 2);
    MinibatchSampler b(200, 20, SamplingMode::kWithReplacement, 2);
    RunOptions o;
    o.cadence = MetricCadence::kEpoch;
    o.store_snapshots = true;
    const auto h = hybrid_warm_start(f.model, f.data, f.s0, 0, w, warm_sched, spider_setup(a), o);
    const auto d = run_algorithm(f.model, f.data, f.s0, spider_setup(b), o);
    CHECK(max_dev(h, d) == 0.0);
    REQUIRE(h.records.size() == d.records.size());
    for (std::size_t i = 0; i < h.records.size(); ++i) {
      CHECK(h.records[i].W == d.records[i].W);
      CHECK(h.records[i].ce_count == d.records[i].ce_count);
      CHECK(h.records[i].epoch == d.records[i].epoch);
    }
    CHECK(h.counters.ce == d.counters.ce);
  }

  SUBCASE("two warm epochs put the phase boundary at epoch 2") {
    MinibatchSampler w(200, 20, SamplingMode::kWithReplacement, 1);
    MinibatchSampler a(200, 20, SamplingMode::kWithReplacement, 2);
    const auto h = hybrid_warm_start(f.model, f.data, f.s0, 2, w, warm_sched, spider_setup(a));
    REQUIRE(h.records.size() == 2 + 2 * 3);
    CHECK(h.records[0].phase == "warm");
    CHECK(h.records[1].phase == "warm");
    CHECK(h.records[1].epoch == 2);
    CHECK(h.records[2].phase == "main");
    CHECK(h.records[2].epoch == 3);
    for (std::size_t i = 1; i < h.records.size(); ++i) {
      CHECK(h.records[i].ce_count >= h.records[i - 1].ce_count);
      CHECK(h.records[i].mstep_count >= h.records[i - 1].mstep_count);
    }
  }

  SUBCASE("counters add across phases") {
    MinibatchSampler w(200, 30, SamplingMode::kWithReplacement, 1);
    MinibatchSampler a(200, 20, SamplingMode::kWithReplacement, 2);
    const auto h = hybrid_warm_start(f.model, f.data, f.s0, 2, w, warm_sched, spider_setup(a));
    const std::uint64_t k_warm = (2 * 200 + 29) / 30;
    const auto warm = closed_form_counters(Algorithm::kOnlineEm, 200, 30, k_warm, 0, 0);
    const auto main = closed_form_counters(Algorithm::kSpiderEm, 200, 20, 0, 3, 11);
    CHECK(h.counters.ce == warm.ce + main.ce);
    CHECK(h.counters.mstep == warm.mstep + main.mstep);
  }
}

TEST_CASE("randomized termination") {
  SUBCASE("one outer and one inner iteration returns the starting point") {
    RunTrace tr;
    const StatVector s{{0.3, 0.7}};
    tr.snapshots.push_back(Snapshot{1, -1, -1, s});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5; ++i) {
      const auto d = randomized_terminate(tr, 1, 1, rng);
      CHECK(d.t == 1);
      CHECK(d.k == -1);
      CHECK(d.state == s);
    }
  }

  Fixture f(100, 2, 2, 3.0, 79);
  const std::uint64_t k_out = 3, k_in = 4;
  MinibatchSampler smp(100, 10, SamplingMode::kWithReplacement, 3);
  const auto tr = run_spider_em(f.model, f.data, f.s0, smp, StepSchedule::constant(0.1), k_out,
                                k_in, snapshots_only());

  SUBCASE("draws are uniform") {
    std::mt19937_64 rng(2024);
    std::map<std::pair<std::uint64_t, std::int64_t>, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const auto d = randomized_terminate(tr, k_out, k_in, rng);
      ++counts[{d.t, d.k}];
      CHECK(d.state == snapshot_at(tr, d.t, d.k, k_in));
    }
    REQUIRE(counts.size() == k_out * k_in);
    const double expect = double(draws) / double(k_out * k_in);
    double chi2 = 0.0;
    for (const auto& kv : counts) chi2 += (kv.second - expect) * (kv.second - expect) / expect;
    // 99th percentile of chi-square with 11 degrees of freedom
    CHECK(chi2 <= 24.725);
  }

  SUBCASE("the uniform average over cells is the trajectory average") {
    double cells = 0.0;
    for (std::uint64_t t = 1; t <= k_out; ++t)
      for (std::uint64_t xi = 0; xi < k_in; ++xi)
        cells += mean_field(f.model, f.data, snapshot_at(tr, t, std::int64_t(xi) - 1, k_in))
                     .squaredNorm();
    // S_{t,-1} = S_{t-1,k_in-1}: every stored iterate except the last two
    // (S_{k_out,k_in-1} and S_{k_out+1,0}), with s_init standing in for
    // both S_{1,-1} and S_{1,0}.
    double direct = mean_field(f.model, f.data, f.s0).squaredNorm();
    for (std::size_t i = 1; i + 2 < tr.snapshots.size(); ++i)
      direct += mean_field(f.model, f.data, tr.snapshots[i].state).squaredNorm();
    CHECK(cells / double(k_out * k_in) == doctest::Approx(direct / double(k_out * k_in)).epsilon(1e-14));
  }

  SUBCASE("traces without snapshots are rejected") {
    RunTrace empty;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(randomized_terminate(empty, 2, 2, rng), UnsupportedOperation);
  }
}

TEST_CASE("theoretical step size") {
  const auto c = theoretical_step_size(1.0, 1.0, 1.0, 1.0, 16, 16);
  CHECK(c.mu_star == doctest::Approx(1.5));
  CHECK(c.gamma == doctest::Approx(1.0 / 3.0));

  const auto m = theoretical_step_size(2.0, 0.5, 3.0, 4.0, 9, 9);
  CHECK(m.mu_star == doctest::Approx(3.0 + 4.0 / 4.0));

  double prev = INFINITY;
  for (std::uint64_t b = 1; b <= 64; b *= 2) {
    const double mu = theoretical_step_size(1.0, 1.0, 2.0, 1.0, 32, b).mu_star;
    CHECK(mu < prev);
    prev = mu;
  }
  CHECK_THROWS_AS(theoretical_step_size(0.0, 1.0, 1.0, 1.0, 1, 1), ArgumentError);
  CHECK_THROWS_AS(theoretical_step_size(1.0, -1.0, 1.0, 1.0, 1, 1), ArgumentError);
  CHECK_THROWS_AS(theoretical_step_size(1.0, 1.0, 1.0, 1.0, 0, 1), ArgumentError);
}

TEST_CASE("oracle accounting matches the closed forms") {
  Fixture f(90, 2, 2, 3.0, 83);
  const std::size_t b = 7;
  for (auto algo : {Algorithm::kEm, Algorithm::kOnlineEm, Algorithm::kIem, Algorithm::kFiem,
                    Algorithm::kSemVr, Algorithm::kSpiderEm, Algorithm::kSpiderEmCv}) {
    MinibatchSampler a(90, b, SamplingMode::kWithReplacement, 1);
    MinibatchSampler c(90, b, SamplingMode::kWithReplacement, 2);
    AlgorithmSetup setup;
    setup.algorithm = algo;
    setup.sampler = &a;
    setup.sampler_prime = &c;
    setup.k_max = 23;
    setup.k_out = 4;
    setup.k_in = 14;
    setup.schedule = StepSchedule::constant(algo == Algorithm::kIem ? 1.0 : 0.05);
    RunOptions o;
    o.cadence = MetricCadence::kEveryIteration;
    const auto tr = run_algorithm(f.model, f.data, f.s0, setup, o);
    CAPTURE(to_string(algo));
    REQUIRE(tr.status == RunStatus::kCompleted);
    const auto cf = closed_form_counters(algo, 90, b, 23, 4, 14);
    CHECK(tr.counters.ce == cf.ce);
    CHECK(tr.counters.mstep == cf.mstep);
    for (std::size_t i = 1; i < tr.records.size(); ++i) {
      CHECK(tr.records[i].ce_count >= tr.records[i - 1].ce_count);
      CHECK(tr.records[i].mstep_count >= tr.records[i - 1].mstep_count);
    }
    // the monitor pays for W and h separately
    CHECK(tr.monitor.ce == 90 * tr.records.size());
  }
  const auto sp = closed_form_counters(Algorithm::kSpiderEm, 1000, 10, 0, 5, 100);
  CHECK(sp.ce == 1000 + 5 * 1000 + 2 * 10 * 99 * 5);
  CHECK(init_cost(Algorithm::kSpiderEm, 1000).ce == 1000);
}

TEST_CASE("identical seeds give identical traces") {
  Fixture f(150, 3, 2, 3.0, 89);
  for (auto algo : {Algorithm::kOnlineEm, Algorithm::kIem, Algorithm::kFiem, Algorithm::kSemVr,
                    Algorithm::kSpiderEm, Algorithm::kSpiderEmPl}) {
    auto once = [&] {
      MinibatchSampler a(150, 10, SamplingMode::kWithReplacement, 5);
      MinibatchSampler c(150, 10, SamplingMode::kWithReplacement, 6);
      AlgorithmSetup setup;
      setup.algorithm = algo;
      setup.sampler = &a;
      setup.sampler_prime = &c;
      setup.xi = uniform_xi(7);
      setup.k_max = 40;
      setup.k_out = 3;
      setup.k_in = 16;
      setup.schedule = StepSchedule::constant(0.05);
      RunOptions o = snapshots_only();
      o.cadence = MetricCadence::kEveryIteration;
      return run_algorithm(f.model, f.data, f.s0, setup, o);
    };
    const auto x = once(), y = once();
    CAPTURE(to_string(algo));
    CHECK(max_dev(x, y) == 0.0);
    REQUIRE(x.records.size() == y.records.size());
    for (std::size_t i = 0; i < x.records.size(); ++i) {
      CHECK(x.records[i].W == y.records[i].W);
      CHECK(x.records[i].h_sq_norm == y.records[i].h_sq_norm);
    }
  }
}

TEST_CASE("run control") {
  Fixture f(100, 2, 2, 3.0, 97);

  SUBCASE("the callback can stop a run") {
    MinibatchSampler a(100, 10, SamplingMode::kWithReplacement, 1);
    RunOptions o;
    o.on_iterate = [](const IterateEvent& ev) { return ev.tau < 5; };
    const auto tr = run_spider_em(f.model, f.data, f.s0, a, StepSchedule::constant(0.1), 3, 10, o);
    CHECK(tr.status == RunStatus::kStopped);
    CHECK(tr.updates == 5);
  }

  SUBCASE("leaving the admissible set marks the run diverged") {
    MinibatchSampler a(100, 2, SamplingMode::kWithReplacement, 1);
    const auto tr =
        run_online_em(f.model, f.data, f.s0, a, StepSchedule::constant(40.0), 50);
    CHECK(tr.status == RunStatus::kDiverged);
    REQUIRE_FALSE(tr.records.empty());
    CHECK(tr.records.back().status == "diverged");
  }

  SUBCASE("a wrong-sized start is an argument error") {
    CHECK_THROWS_AS(run_em(f.model, f.data, StatVector::Zero(3), 2), ArgumentError);
  }
}

TEST_CASE("step schedules") {
  CHECK(StepSchedule::parse("0.25").at(7) == 0.25);
  CHECK(StepSchedule::parse("constant:0.5").at(1) == 0.5);
  CHECK(StepSchedule::parse("inverse-sqrt:2").at(4) == 1.0);
  const auto t = StepSchedule::parse("table:1,0.5,0.25");
  CHECK(t.at(2) == 0.5);
  CHECK(t.at(10) == 0.25);
  CHECK(StepSchedule::parse(t.describe()).at(3) == 0.25);
  CHECK_THROWS_AS(StepSchedule::parse("constant:-1"), ArgumentError);
  CHECK_THROWS_AS(StepSchedule::parse("cosine:1"), ArgumentError);
  CHECK_THROWS_AS(StepSchedule::constant(1.0).at(0), ArgumentError);
  CHECK(algorithm_from_string("spider-em-pl") == Algorithm::kSpiderEmPl);
  CHECK_THROWS_AS(algorithm_from_string("adam"), ArgumentError);
}
