#include "wash/deterministic.hpp"
#include "wash/sde.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace wash;

namespace {

constexpr double kAlpha = 0.1270088598;

ModelParams params(double eps) { return make_params(0.1, kAlpha, eps, 0.44); }

InitialCondition start() {
  static const double p0 = heteroclinic_table(saddle_algebra(0.1, critical_tilt(0.1).alpha)).p_at(kPi);
  return {-kPi, p0, 0};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool identical(const TrialRecord& a, const TrialRecord& b) {
  if (a.seed != b.seed || a.N != b.N || a.outcome != b.outcome || a.steps != b.steps) return false;
  if (!same_bits(a.T_final, b.T_final) || !same_bits(a.x_final, b.x_final) || !same_bits(a.p_final, b.p_final))
    return false;
  if (a.events.size() != b.events.size()) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const auto &e = a.events[i], &f = b.events[i];
    if (e.k != f.k || e.crossed != f.crossed || !same_bits(e.S_k, f.S_k) || !same_bits(e.T_k1, f.T_k1) ||
        !same_bits(e.z_at_S, f.z_at_S) || !same_bits(e.v_at_T, f.v_at_T))
      return false;
  }
  return true;
}

// Deterministic endpoint at t = 1 from (x0, p0) with n steps of size 1/n.
template <typename Step>
double endpoint_error(const ModelParams& m, int n, Step step) {
  const SaddleAlgebra& sys = m;
  const DetState ref = integrate_det(sys, {0.0, -2.0, 1.3}, 1.0, 1e-12).back();
  SdeState s;
  s.x = -2.0;
  s.p = 1.3;
  for (int i = 0; i < n; ++i) step(s, 1.0 / n);
  return std::hypot(s.x - ref.X, s.p - ref.P);
}

}  // namespace

TEST_CASE("zv transform round trip") {
  const ModelParams m = params(1e-4);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ux(-30.0, 30.0), up(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(gen), p = up(gen);
    const int k = static_cast<int>(std::lround(x / kTwoPi));
    const ZV zv = zv_transform(x, p, k, m);
    const auto [xb, pb] = zv_inverse(zv.z, zv.v, k, m);
    CHECK(std::abs(xb - x) <= 1e-14 * std::max(1.0, std::abs(x)) * 4);
    CHECK(std::abs(pb - p) <= 1e-14 * std::max(1.0, std::abs(p)) * 4);
  }
  const ZV at_saddle = zv_transform(kTwoPi * 3, 0.4, 3, m);
  CHECK(at_saddle.z == 0.4);
  CHECK(at_saddle.v == 0.4);
}

TEST_CASE("noiseless steps converge to the flow at their orders") {
  const ModelParams m = params(1e-4);
  auto em = [&](SdeState& s, double h) { em_step(s, m, h, 0.0); };
  auto sp = [&](SdeState& s, double h) { splitting_step(s, m, SplittingStep(m, h), 0.0); };
  const double e1 = endpoint_error(m, 200, em), e2 = endpoint_error(m, 400, em);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  const double s1 = endpoint_error(m, 200, sp), s2 = endpoint_error(m, 400, sp);
  CHECK(s1 / s2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("ou exact step has the closed-form variances for any step size") {
  const ModelParams m = params(1e-3);
  const double t = 1.0 / m.lambda_plus;
  const long n = 100000;
  for (int steps : {1, 7}) {
    const OuStep c(m, t / steps);
    NormalStream rng(99 + steps);
    double sz = 0, sv = 0;
    for (long i = 0; i < n; ++i) {
      ZV zv;
      for (int j = 0; j < steps; ++j) zv = ou_exact_step(zv, c, std::sqrt(c.dt) * rng());
      sz += zv.z * zv.z;
      sv += zv.v * zv.v;
    }
    const double e2 = m.epsilon * m.epsilon;
    const double vz = e2 / (2 * m.lambda_plus) * std::expm1(2 * m.lambda_plus * t);
    const double vv = e2 / (2 * -m.lambda_minus) * -std::expm1(2 * m.lambda_minus * t);
    // Sample second moment of a centred Gaussian: SE = var sqrt(2/n).
    CHECK(std::abs(sz / n - vz) < 4 * vz * std::sqrt(2.0 / n));
    CHECK(std::abs(sv / n - vv) < 4 * vv * std::sqrt(2.0 / n));
  }
}

TEST_CASE("ou v component relaxes to its stationary variance") {
  const ModelParams m = params(1e-3);
  const OuStep c(m, 0.5);
  NormalStream rng(4);
  const long n = 100000;
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    ZV zv;
    for (int j = 0; j < 40; ++j) zv = ou_exact_step(zv, c, std::sqrt(c.dt) * rng());
    acc += zv.v * zv.v;
  }
  const double target = m.epsilon * m.epsilon / (2 * -m.lambda_minus);
  CHECK(std::abs(acc / n - target) < 4 * target * std::sqrt(2.0 / n));
}

TEST_CASE("splitting friction and noise coefficients are the exact OU ones") {
  const ModelParams m = params(1e-3);
  const SplittingStep c(m, 0.01);
  CHECK(c.damp == doctest::Approx(std::exp(-m.gamma * 0.01)).epsilon(1e-15));
  const double var = c.noise * c.noise * 0.01;
  CHECK(var == doctest::Approx(m.epsilon * m.epsilon * -std::expm1(-2 * m.gamma * 0.01) / (2 * m.gamma)).epsilon(1e-12));
}

TEST_CASE("same seed, same trial") {
  const ModelParams m = params(1e-3);
  SimSettings cfg;
  cfg.dt = default_dt(m);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::uint64_t seed = trial_seed(5, i);
    CHECK(identical(simulate_trial(m, start(), seed, cfg), simulate_trial(m, start(), seed, cfg)));
  }
  CHECK_FALSE(identical(simulate_trial(m, start(), 1, cfg), simulate_trial(m, start(), 2, cfg)));
}

TEST_CASE("trial records are internally consistent") {
  const ModelParams m = params(1e-3);
  SimSettings cfg;
  cfg.dt = default_dt(m);
  cfg.k_max = 60;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const TrialRecord r = simulate_trial(m, start(), trial_seed(8, i), cfg);
    REQUIRE(r.outcome == Outcome::Trapped);
    REQUIRE(!r.events.empty());
    int crossed = 0;
    double last_t = 0.0;
    for (std::size_t j = 0; j < r.events.size(); ++j) {
      const CrossingEvent& e = r.events[j];
      CHECK(e.k == static_cast<int>(j));
      CHECK(e.S_k >= last_t);
      CHECK(e.T_k1 >= e.S_k);
      last_t = e.T_k1;
      crossed += e.crossed;
      CHECK(e.crossed == (j + 1 < r.events.size()));
    }
    CHECK(r.N == crossed);
    CHECK(r.T_final == r.events.back().T_k1);
    const ZV zv = zv_transform(r.x_final, r.p_final, r.N, m);
    CHECK(zv.z <= -m.eta_eps * (1 - 1e-9));
    CHECK(r.steps > 0);
  }
}

TEST_CASE("trace sees every step in order") {
  const ModelParams m = params(1e-3);
  SimSettings cfg;
  cfg.dt = default_dt(m);
  long calls = 0;
  double last_t = -1.0;
  int last_k = 0;
  bool ordered = true;
  const TraceFn fn = [&](const SdeState& s) {
    ordered = ordered && s.t > last_t && s.k >= last_k;
    last_t = s.t;
    last_k = s.k;
    ++calls;
  };
  const TrialRecord r = simulate_trial(m, start(), 3, cfg, &fn);
  CHECK(ordered);
  CHECK(calls == static_cast<long>(r.steps) + 1);
}

TEST_CASE("time cap and crossing cap") {
  const ModelParams m = params(1e-3);
  SimSettings cfg;
  cfg.dt = default_dt(m);
  cfg.t_max = 1.0;
  const TrialRecord capped = simulate_trial(m, start(), 1, cfg);
  CHECK(capped.outcome == Outcome::CapHit);
  CHECK(capped.T_final >= 1.0);

  cfg.t_max = 0.0;
  cfg.k_max = 1;
  int kmax = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const TrialRecord r = simulate_trial(m, start(), trial_seed(2, i), cfg);
    CHECK(r.N <= 1);
    kmax += r.outcome == Outcome::KMax;
  }
  CHECK(kmax > 20);
  CHECK(kmax < 80);

  cfg.k_max = 0;
  CHECK_THROWS_AS(simulate_trial(m, start(), 1, cfg), SimulationError);
}

TEST_CASE("halving the step keeps the crossing count on coupled paths") {
  const ModelParams m = params(1e-3);
  SimSettings coarse;
  coarse.dt = default_dt(m);
  SimSettings fine = coarse;
  fine.substeps = 2;
  const int n = 400;
  int agree = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t seed = trial_seed(21, i);
    agree += simulate_trial(m, start(), seed, coarse).N == simulate_trial(m, start(), seed, fine).N;
  }
  CHECK(agree >= n * 97 / 100);
}

TEST_CASE("coupling gap to the exact linear companion is second order in eta") {
  const ModelParams m = params(1e-4);
  SimSettings cfg;
  cfg.dt = default_dt(m);
  int small = 0, total = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    for (const CrossingEvent& e : simulate_trial(m, start(), trial_seed(6, i), cfg).events) {
      ++total;
      small += e.coupling_gap <= 10 * m.eta_eps * m.eta_eps;
    }
  }
  CHECK(small >= total * 95 / 100);
}

TEST_CASE("names") {
  CHECK(to_string(Outcome::Trapped) == "trapped");
  CHECK(to_string(Outcome::CapHit) == "cap_hit");
  CHECK(to_string(Outcome::KMax) == "k_max");
  CHECK(to_string(Phase::Critical) == "critical");
  CHECK(to_string(Scheme::Splitting) == "splitting");
}
