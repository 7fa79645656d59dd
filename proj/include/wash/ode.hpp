#pragma once

// Dormand-Prince 5(4) with the standard 4th-order continuous extension.
// Header-only, templated on a fixed-size Eigen column vector.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace wash {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 selects an automatic first step
  double h_max = 0.0;   // 0 means unbounded
  std::size_t max_steps = 2'000'000;
};

/// One accepted step together with its dense-output polynomial.
template <int N>
struct DenseStep {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec<N> y0;
  Vec<N> y1;
  Vec<N> c2, c3, c4, c5;

  double h() const { return t1 - t0; }

  Vec<N> operator()(double t) const {
    const double s = (t - t0) / (t1 - t0);
    const double s1 = 1.0 - s;
    return y0 + s * (c2 + s1 * (c3 + s * (c4 + s1 * c5)));
  }
};

/// Locates a root of g(dense(t)) inside [step.t0, step.t1] given a sign change.
template <int N, typename G>
double locate_root(const DenseStep<N>& step, G&& g, double tol = 1e-14) {
  double a = step.t0, b = step.t1;
  double ga = g(step.y0), gb = g(step.y1);
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  // Illinois-modified regula falsi.
  int side = 0;
  for (int it = 0; it < 200 && std::abs(b - a) > tol * std::max(1.0, std::abs(b)); ++it) {
    const double c = (a * gb - b * ga) / (gb - ga);
    const double gc = g(step(c));
    if (gc == 0.0) return c;
    if ((gc > 0) == (gb > 0)) {
      b = c;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = c;
      ga = gc;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (a + b);
}

/// Integrates y' = f(t, y) from t0 to t_end (either direction). The observer
/// receives every accepted DenseStep and returns false to stop early.
/// Returns the last accepted step.
template <int N, typename Rhs, typename Observer>
DenseStep<N> integrate_dopri5(Rhs&& f, double t0, const Vec<N>& y_init, double t_end,
                              const OdeOptions& opt, Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  const double dir = t_end >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t_end - t0);
  double t = t0;
  Vec<N> y = y_init;
  Vec<N> k1 = f(t, y);

  auto err_norm = [&](const Vec<N>& err, const Vec<N>& ya, const Vec<N>& yb) {
    const Vec<N> sc = (opt.atol + opt.rtol * ya.cwiseAbs().cwiseMax(yb.cwiseAbs()).array()).matrix();
    return std::sqrt((err.array() / sc.array()).square().mean());
  };

  double h = opt.h_init;
  if (h <= 0.0) {
    const Vec<N> sc = (opt.atol + opt.rtol * y.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1n = std::sqrt((k1.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);
    const Vec<N> y1 = y + dir * h0 * k1;
    const Vec<N> f1 = f(t + dir * h0, y1);
    const double d2 = std::sqrt(((f1 - k1).array() / sc.array()).square().mean()) / h0;
    const double h1 = std::max(d1n, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1n, d2), 0.2);
    h = std::min(100.0 * h0, h1);
  }
  if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
  h = std::min(h, span);

  DenseStep<N> step;
  step.t0 = step.t1 = t;
  step.y0 = step.y1 = y;
  step.c2.setZero();
  step.c3.setZero();
  step.c4.setZero();
  step.c5.setZero();

  double err_prev = 1e-4;
  bool rejected = false;
  for (std::size_t n = 0; n < opt.max_steps; ++n) {
    if (std::abs(t_end - t) <= 1e-15 * std::max(1.0, std::abs(t_end))) return step;
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("step size underflow at t = " + std::to_string(t));
    bool last = false;
    if (h >= std::abs(t_end - t)) {
      h = std::abs(t_end - t);
      last = true;
    }
    const double hs = dir * h;
    const Vec<N> k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const Vec<N> k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Vec<N> k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec<N> k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec<N> k6 =
        f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec<N> ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vec<N> k7 = f(t + hs, ynew);
    const Vec<N> err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = err_norm(err, y, ynew);
    if (!std::isfinite(en)) {
      h *= 0.1;
      rejected = true;
      continue;
    }

    if (en <= 1.0) {
      step.t0 = t;
      step.t1 = last ? t_end : t + hs;
      step.y0 = y;
      step.y1 = ynew;
      const Vec<N> ydiff = ynew - y;
      const Vec<N> bspl = hs * k1 - ydiff;
      step.c2 = ydiff;
      step.c3 = bspl;
      step.c4 = ydiff - hs * k7 - bspl;
      step.c5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      t = step.t1;
      y = ynew;
      k1 = k7;
      if (!observer(static_cast<const DenseStep<N>&>(step))) return step;
      if (last) return step;

      // PI step-size control
      double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      fac = std::clamp(fac, 0.2, 10.0);
      if (rejected) fac = std::min(fac, 1.0);
      h *= fac;
      if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
      err_prev = std::max(en, 1e-4);
      rejected = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      rejected = true;
    }
  }
  throw IntegrationError("maximum number of steps exceeded");
}

template <int N, typename Rhs>
Vec<N> integrate_dopri5(Rhs&& f, double t0, const Vec<N>& y0, double t_end, const OdeOptions& opt) {
  return integrate_dopri5<N>(std::forward<Rhs>(f), t0, y0, t_end, opt,
                             [](const DenseStep<N>&) { return true; })
      .y1;
}

}  // namespace wash
