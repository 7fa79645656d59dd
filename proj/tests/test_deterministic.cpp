#include "wash/deterministic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace wash;

namespace {

constexpr double kAlphaRef = 0.1270088598;  // gamma = 0.1

const OrbitTable& reference_orbit() {
  static const OrbitTable t = heteroclinic_table(saddle_algebra(0.1, critical_tilt(0.1).alpha));
  return t;
}

// Area under the undamped separatrix p = 2|sin(x/2)| over one period.
double separatrix_area() {
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = kTwoPi * i / n;
    s += (i == 0 || i == n ? 0.5 : 1.0) * 2.0 * std::abs(std::sin(0.5 * x));
  }
  return s * kTwoPi / n;
}

}  // namespace

TEST_CASE("dopri5 on the harmonic oscillator") {
  auto f = [](double, const Vec<2>& y) {
    Vec<2> d;
    d << y[1], -y[0];
    return d;
  };
  Vec<2> y0;
  y0 << 1.0, 0.0;
  OdeOptions opt;
  double worst_dense = 0.0;
  const Vec<2> y = integrate_dopri5<2>(f, 0.0, y0, 10.0, opt, [&](const DenseStep<2>& st) {
    const double tm = 0.5 * (st.t0 + st.t1);
    worst_dense = std::max(worst_dense, std::abs(st(tm)[0] - std::cos(tm)));
    return true;
  }).y1;
  CHECK(std::abs(y[0] - std::cos(10.0)) < 1e-9);
  CHECK(std::abs(y[1] + std::sin(10.0)) < 1e-9);
  CHECK(worst_dense < 1e-8);
}

TEST_CASE("hermite spline reproduces cubics and stays monotone on monotone data") {
  std::vector<double> x, y, d;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.3 * i;
    x.push_back(t);
    y.push_back(t * t * t - 2 * t);
    d.push_back(3 * t * t - 2);
  }
  const HermiteSpline s(x, y, d);
  for (double t = 0.05; t < 3.0; t += 0.1) CHECK(s(t) == doctest::Approx(t * t * t - 2 * t).epsilon(1e-12));

  // Steps with overshooting slopes.
  const HermiteSpline m({0, 1, 2, 3}, {0, 0.1, 0.2, 5}, {0, 10, 10, 0});
  double prev = m(0.0);
  for (double t = 0.01; t <= 3.0; t += 0.01) {
    CHECK(m(t) >= prev - 1e-15);
    prev = m(t);
  }
}

TEST_CASE("undamped flow conserves energy") {
  const SaddleAlgebra sys = saddle_algebra(1e-13, 0.0);
  const auto w = sys.potential();
  const DetState s0{0.0, 1.0, 0.3};
  const DetPath path = integrate_det(sys, s0, 20.0, 1e-11);
  const double e0 = 0.5 * s0.P * s0.P + w.V(s0.X);
  for (const DetState& s : path.nodes) CHECK(std::abs(0.5 * s.P * s.P + w.V(s.X) - e0) < 1e-8);
}

TEST_CASE("damped flow dissipates energy at rate gamma p^2") {
  const SaddleAlgebra sys = saddle_algebra(0.2, 0.1);
  const auto w = sys.potential();
  const DetPath path = integrate_det(sys, {0.0, 0.5, 1.0}, 5.0, 1e-11);
  double lost = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double t = 5.0 * (i + 0.5) / n;
    const DetState s = path.at(t);
    lost += sys.gamma * s.P * s.P * 5.0 / n;
  }
  // Tilt enters V, so total energy is P^2/2 + V.
  const DetState a = path.nodes.front(), b = path.back();
  const double de = (0.5 * b.P * b.P + w.V(b.X)) - (0.5 * a.P * a.P + w.V(a.X));
  CHECK(de == doctest::Approx(-lost).epsilon(1e-6));
}

TEST_CASE("orbit classification") {
  CHECK(classify_orbit(0.1, 0.01, 1e-8) == OrbitClass::Locked);
  CHECK(classify_orbit(0.1, 0.99, 1e-8) == OrbitClass::Running);
  CHECK(classify_orbit(0.1, 1.5, 1e-8) == OrbitClass::Running);
  // Monotone in alpha: one switch from Locked to Running.
  int switches = 0;
  OrbitClass prev = classify_orbit(0.1, 0.02, 1e-12);
  for (double a = 0.02; a < 0.9; a += 0.02) {
    const OrbitClass c = classify_orbit(0.1, a, 1e-12);
    if (c != prev) ++switches;
    CHECK((a < kAlphaRef ? c == OrbitClass::Locked : c == OrbitClass::Running));
    prev = c;
  }
  CHECK(switches == 1);
}

TEST_CASE("critical tilt") {
  const CriticalTilt ct = critical_tilt(0.1);
  CHECK(ct.alpha == doctest::Approx(kAlphaRef).epsilon(1e-9));
  CHECK(ct.upper - ct.lower <= 1e-10);
  CHECK(ct.lower <= ct.alpha);
  CHECK(ct.alpha <= ct.upper);
}

TEST_CASE("critical tilt approaches the undamped separatrix estimate") {
  // Energy balance over one period: gamma * area = 2 pi alpha.
  const double ratio = separatrix_area() / kTwoPi;
  CHECK(ratio == doctest::Approx(4.0 / kPi).epsilon(1e-9));
  const double r001 = critical_tilt(0.01).alpha / 0.01;
  const double r005 = critical_tilt(0.05).alpha / 0.05;
  CHECK(std::abs(r001 - ratio) / ratio < 0.02);
  CHECK(std::abs(r005 - ratio) / ratio < 0.10);
}

TEST_CASE("critical tilt increases with friction") {
  double prev = 0.0;
  for (double g : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    const double a = critical_tilt(g, 1e-9).alpha;
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("heteroclinic table") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  CHECK(t.kind == OrbitKind::Heteroclinic);
  CHECK(t.x_min() == doctest::Approx(0.0));
  CHECK(t.x_max() == doctest::Approx(kTwoPi));
  CHECK(std::abs(t.left_slope - sys.lambda_plus) < 1e-3);
  CHECK(std::abs(t.right_slope - sys.lambda_minus) < 1e-3);
  const std::size_t n = t.grid.size();
  CHECK(std::abs((t.p_values[1] - t.p_values[0]) / (t.grid[1] - t.grid[0]) - sys.lambda_plus) < 1e-3);
  CHECK(std::abs((t.p_values[n - 1] - t.p_values[n - 2]) / (t.grid[n - 1] - t.grid[n - 2]) - sys.lambda_minus) < 1e-3);

  const double flux = kTwoPi * t.alpha_used / 0.1;
  CHECK(std::abs(t.flux_integral - flux) / flux < 1e-6);

  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < t.grid.size(); ++i) {
    const double xm = 0.5 * (t.grid[i] + t.grid[i + 1]);
    worst = std::max(worst, orbit_residual(t, sys, xm));
    CHECK(t.p_at(xm) > 0.0);
  }
  CHECK(worst < 1e-8);
  CHECK(std::abs(t.p_values.front()) < 1e-7);
  CHECK(std::abs(t.p_values.back()) < 1e-7);
}

TEST_CASE("heteroclinic of another well is the shifted copy") {
  const OrbitTable& t1 = reference_orbit();
  const OrbitTable t3 = heteroclinic_table(saddle_algebra(0.1, t1.alpha_used), 1025, kLaunchOffset, 3);
  CHECK(t3.left_saddle() == doctest::Approx(2 * kTwoPi));
  for (double x = 0.3; x < 6.0; x += 0.37) CHECK(t3.p_at(x + 2 * kTwoPi) == doctest::Approx(t1.p_at(x)).epsilon(1e-7));
}

TEST_CASE("riccati equation along the orbit") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  for (double x = 0.05; x < kTwoPi - 0.05; x += 0.05) CHECK(riccati_residual(t, sys, x) < 1e-5);
}

TEST_CASE("slope along the approach window is bounded uniformly in eta") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  auto sup_omega = [&](double eta) {
    const WindowSpan w = approach_window(t, sys, eta);
    double s = 0.0;
    for (int i = 0; i <= 2000; ++i) s = std::max(s, std::abs(omega_along(t, w.x_start + (w.x_end - w.x_start) * i / 2000)));
    return s;
  };
  const double a = sup_omega(1e-2), b = sup_omega(1e-3);
  CHECK(std::abs(a / b - 1.0) < 0.10);
}

TEST_CASE("generic orbit through a heteroclinic point follows it") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  const OrbitTable g = generic_orbit_table(sys, 1.0, t.p_at(1.0), 5.0);
  for (double x = 1.0; x <= 5.0; x += 0.25) CHECK(g.p_at(x) == doctest::Approx(t.p_at(x)).epsilon(1e-7));
}

TEST_CASE("variance by time and by space agree") {
  const OrbitTable& t = reference_orbit();
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const ModelParams m = make_params(0.1, t.alpha_used, eps, 0.44);
    const WindowSpan w = approach_window(t, m, m.eta_eps);
    const VarianceProfile r = sigma_r_profile(m, t, w);
    const VarianceProfile y = sigma_y_profile(m, t, w);
    CHECK(r.max_rel_gap < 1e-6);
    CHECK(y.max_rel_gap < 1e-6);
    const double sr = std::sqrt(*std::max_element(r.by_time.begin(), r.by_time.end()));
    const double sy = std::sqrt(*std::max_element(y.by_time.begin(), y.by_time.end()));
    CHECK(sr / m.sigma_eps > 0.1);
    CHECK(sr / m.sigma_eps < 10.0);
    CHECK(sy / (eps / m.eta_eps) < 10.0);
  }
}

TEST_CASE("sigma functionals grow along the window") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  const WindowSpan w = approach_window(t, sys, 3e-3);
  std::vector<double> xs;
  for (int i = 1; i <= 20; ++i) xs.push_back(w.x_start + (w.x_end - w.x_start) * i / 20);
  const SigmaValues v = sigma_functionals(t, sys, w.x_start, xs);
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(v.r2[i] >= v.r2[i - 1]);
  CHECK(sigma_functional(SigmaKind::R, 2, t, sys, w.x_start, xs.back()) == doctest::Approx(v.r2.back()).epsilon(1e-6));
}

TEST_CASE("orbit offsets") {
  const OrbitTable& t = reference_orbit();
  const SaddleAlgebra sys = saddle_algebra(0.1, t.alpha_used);
  const WindowSpan w = approach_window(t, sys, 1e-2);

  const RhoProfile zero = rho_propagation(t, sys, 0.0, w.x_start, w.x_end);
  for (double r : zero.rho) CHECK(std::abs(r) < 1e-10);

  for (double rho0 : {1e-5, -1e-5, 5e-5}) {
    const RhoProfile p = rho_propagation(t, sys, rho0, w.x_start, w.x_end);
    CHECK_FALSE(p.trapped);
    double sup = 0.0;
    for (double r : p.rho) sup = std::max(sup, std::abs(r));
    // The largest offset sits at one of the window ends.
    CHECK(sup == doctest::Approx(std::max(std::abs(p.rho.front()), std::abs(p.rho.back()))).epsilon(1e-9));
    CHECK(sup < 1e-2);
    // Sign is preserved: orbits do not cross.
    for (double r : p.rho) CHECK(r * rho0 >= 0.0);
  }
  CHECK_THROWS(rho_propagation(t, sys, 0.1, w.x_start, w.x_end));
}
