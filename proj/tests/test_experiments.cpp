#include "wash/commands.hpp"
#include "wash/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace wash;

namespace {

const Regime& regime() {
  static const Regime r = critical_regime(0.1, 2049);
  return r;
}

double uniform01(std::mt19937_64& g) { return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53; }

// Summary whose trapped counts are drawn from P{N = k} = (1 - q) q^k.
BatchSummary synthetic_batch(double q, long n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  BatchSummary s;
  s.k_max = 12;
  s.n_trials = n;
  s.counts.assign(13, 0);
  for (long i = 0; i < n; ++i) {
    const int k = static_cast<int>(std::floor(std::log(uniform01(g)) / std::log(q)));
    if (k <= 12)
      ++s.counts[static_cast<std::size_t>(k)];
    else
      ++s.k_max_hits;
  }
  s.trapped = n - s.k_max_hits;
  return s;
}

}  // namespace

TEST_CASE("wilson interval") {
  const Interval a = wilson_interval(5, 10);
  CHECK(a.lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(a.hi == doctest::Approx(0.7634).epsilon(1e-3));
  CHECK(wilson_interval(0, 50).lo == doctest::Approx(0.0));
  CHECK(wilson_interval(50, 50).hi == doctest::Approx(1.0));
  // Contains the estimate and shrinks like 1/sqrt(n).
  double prev = 1.0;
  for (long n : {100L, 400L, 1600L, 6400L}) {
    const Interval i = wilson_interval(3 * n / 10, n);
    CHECK(i.lo <= 0.3);
    CHECK(i.hi >= 0.3);
    const double w = i.hi - i.lo;
    CHECK(w < prev);
    if (n > 100) CHECK(prev / w == doctest::Approx(2.0).epsilon(0.05));
    prev = w;
  }
}

TEST_CASE("mean and sd do not depend on input order") {
  std::mt19937_64 g(1);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(uniform01(g) * 1e3 - 3e2);
  const MeanSd a = ordered_mean_sd(v);
  for (int r = 0; r < 5; ++r) {
    std::shuffle(v.begin(), v.end(), g);
    const MeanSd b = ordered_mean_sd(v);
    CHECK(a.mean == b.mean);
    CHECK(a.sd == b.sd);
  }
  const MeanSd c = ordered_mean_sd({1.0, 2.0, 3.0, 4.0});
  CHECK(c.mean == 2.5);
  CHECK(c.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("line fit recovers exact lines") {
  const LinearFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  const LinearFit n = fit_line({0, 1, 2, 3}, {0, 1, 0, 1});
  CHECK(n.r2 < 0.5);
}

TEST_CASE("geometric law check accepts the law and rejects a shifted one") {
  const GofReport good = geometric_gof(synthetic_batch(0.5, 10000, 1));
  CHECK(good.pass);
  for (const GofRow& r : good.rows) CHECK(r.pass);

  const GofReport bad = geometric_gof(synthetic_batch(0.4, 10000, 2));  // P{N=0} = 0.6
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.rows.front().pass);

  // No tail row when every count sits below the pooling level.
  BatchSummary short_tail;
  short_tail.n_trials = 100;
  short_tail.counts = {50, 25, 13, 12};
  short_tail.trapped = 100;
  const GofReport st = geometric_gof(short_tail);
  CHECK(st.rows.size() == 4);
  CHECK(st.pass);

  BatchSummary lossy = synthetic_batch(0.5, 10000, 3);
  lossy.cap_hit = 200;
  lossy.trapped -= 200;
  CHECK_FALSE(geometric_gof(lossy).mass_pass);
}

TEST_CASE("batch aggregation is order independent and accounts for every trial") {
  const ModelParams m = make_params(0.1, regime().tilt.alpha, 1e-3, 0.44);
  BatchOptions opt;
  opt.n_trials = 200;
  opt.master_seed = 77;
  opt.sim.dt = default_dt(m);
  opt.threads = 1;
  const std::vector<TrialRecord> records = run_trials(m, default_initial_condition(regime()), opt);
  const std::string ref = batch_json(summarize(m, opt, records)).dump();

  std::mt19937_64 g(4);
  for (int r = 0; r < 3; ++r) {
    std::vector<TrialRecord> shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), g);
    CHECK(batch_json(summarize(m, opt, shuffled)).dump() == ref);
  }

  opt.threads = 3;
  CHECK(batch_json(run_batch(m, default_initial_condition(regime()), opt)).dump() == ref);

  const BatchSummary s = summarize(m, opt, records);
  long total = s.cap_hit + s.k_max_hits;
  for (long c : s.counts) total += c;
  CHECK(total == s.n_trials);
  for (std::size_t k = 0; k < s.p_hat.size(); ++k) {
    CHECK(s.ci[k].lo <= s.p_hat[k]);
    CHECK(s.p_hat[k] <= s.ci[k].hi);
  }

  opt.n_trials = 99;
  CHECK_THROWS(run_batch(m, default_initial_condition(regime()), opt));
}

TEST_CASE("ou variance check passes for the exact process") {
  const ModelParams m = make_params(0.1, regime().tilt.alpha, 1e-4, 0.44);
  const OuVarianceReport r = ou_variance_check(m, 100000, 12);
  CHECK(r.checks.size() == 6);
  CHECK(r.pass);
}

TEST_CASE("time scale prediction") {
  const SaddleAlgebra& sys = regime().sys;
  CHECK(timescale_slope(sys, 0.44) == doctest::Approx(0.17107).epsilon(1e-3));

  // Means placed exactly on the predicted line.
  std::vector<BatchSummary> b(3);
  const double eps[] = {1e-3, 1e-4, 1e-5};
  for (int i = 0; i < 3; ++i) {
    b[i].params = make_params(0.1, regime().tilt.alpha, eps[i], 0.44);
    b[i].crossing_time = {0.2 + timescale_slope(sys, 0.44) * std::log(1.0 / eps[i]), 0.1, 1000};
  }
  const TimescaleReport r = timescale_scan(b);
  CHECK(r.pass);
  CHECK(r.monotone);
  CHECK(r.relative_error < 1e-9);
  b.pop_back();
  CHECK_THROWS(timescale_scan(b));
}

TEST_CASE("trapping box is closed") {
  const ModelParams m = make_params(0.1, regime().tilt.alpha, 1e-4, 0.44);
  const double L = m.lambda_plus - m.lambda_minus;
  const double s = m.sigma_bar_eps * std::pow(m.epsilon, -0.05) / m.eta_eps;
  const double x = kTwoPi * 2 - m.eta_eps / L * (1.0 - s);
  const double p = -m.lambda_plus * m.eta_eps / L * (1.0 - std::abs(m.lambda_minus) * s / m.lambda_plus);
  CHECK(in_trapping_box(m, 2, x, p));
  CHECK_FALSE(in_trapping_box(m, 2, std::nextafter(x, 100.0), p));
  CHECK_FALSE(in_trapping_box(m, 2, x, std::nextafter(p, 100.0)));
  CHECK(in_trapping_box(m, 2, x - 1.0, p - 1.0));
}

TEST_CASE("comparison identity") {
  SUBCASE("linear drift: the two paths coincide") {
    const ScalarDrift lin{[](double x) { return -0.7 * x + 0.2; }, -0.7, 0.2};
    const ComparisonReport r = comparison_lemma_check(lin, 0.3, 0.1, 2.0, 1e-3, 50, 1);
    CHECK(r.violations == 0);
    CHECK(r.checked_steps == 0);
  }
  SUBCASE("one-signed remainder keeps the gap one-signed") {
    const ScalarDrift q{[](double x) { return -x + 0.5 * x * x; }, -1.0, 0.0};
    const ComparisonReport r = comparison_lemma_check(q, 0.1, 0.2, 3.0, 1e-3, 200, 2);
    CHECK(r.pass);
    CHECK(r.lag_steps == 0);
  }
  SUBCASE("saddle drift") {
    const ComparisonReport r = comparison_lemma_check(saddle_drift(regime().sys), 0.0, 0.05, 3.0, 1e-3, 200, 3);
    CHECK(r.pass);
    CHECK(r.checked_steps > 0);
  }
}

TEST_CASE("marcus-shepp tail") {
  const ModelParams m = make_params(0.1, regime().tilt.alpha, 1e-4, 0.44);
  const MarcusSheppReport r = marcus_shepp_check(m, {0.0, 3.0, 4.0}, 20000, 5);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].empirical == 1.0);
  CHECK(r.rows[0].bound == doctest::Approx(2.0));
  CHECK(r.rows[1].bound == doctest::Approx(2 * std::exp(-9 * 0.45)));
  CHECK(r.pass);
  CHECK(r.t_start == doctest::Approx(1.0 / -m.lambda_minus));
}

TEST_CASE("scaling exponents of the orbit functionals") {
  const ScalingReport r = scaling_suite(regime(), {1e-2, 3e-3, 1e-3});
  CHECK(r.pass);
  for (const ExponentFit& f : r.fits) {
    INFO(f.name);
    CHECK(f.pass);
    CHECK(f.fit.r2 > 0.95);
  }
  CHECK_THROWS(scaling_suite(regime(), {1e-2, 1e-3}));
}

TEST_CASE("spread checks on a small batch") {
  const ModelParams m = make_params(0.1, regime().tilt.alpha, 1e-3, 0.44);
  BatchOptions opt;
  opt.n_trials = 300;
  opt.sim.dt = default_dt(m);
  const BatchSummary s = run_batch(m, default_initial_condition(regime()), opt);
  for (const VarianceCheck& c : trial_spread_checks(s)) {
    INFO(c.name);
    CHECK(c.pass);
  }
}
