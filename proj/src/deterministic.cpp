#include "wash/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wash {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Second-order expansion of the saddle branch with slope lambda:
// P(u) = lambda h + c h^2, h = distance along x, c = alpha lambda / (2 (2 lambda^2 + beta)).
double branch_seed(const SaddleAlgebra& sys, double lambda, double h) {
  const double c = sys.alpha * lambda / (2.0 * (2.0 * lambda * lambda + sys.beta));
  return lambda * h + c * h * h;
}

// Tolerances for orbit integrations in x. Values of P start at ~1e-8 near
// saddles, so error control is essentially relative.
OdeOptions orbit_options() {
  OdeOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-18;
  return o;
}

}  // namespace

DetState DetPath::at(double t) const {
  if (steps.empty()) return nodes.front();
  auto it = std::lower_bound(steps.begin(), steps.end(), t,
                             [](const DenseStep<2>& s, double v) { return s.t1 < v; });
  if (it == steps.end()) it = std::prev(steps.end());
  const Vec<2> y = (*it)(t);
  return {t, y[0], y[1]};
}

DetPath integrate_det(const SaddleAlgebra& sys, const DetState& s0, double t_end, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_det: tolerance must be positive");
  const auto pot = sys.potential();
  const double gamma = sys.gamma;
  auto rhs = [&](double, const Vec<2>& y) {
    Vec<2> d;
    d << y[1], -gamma * y[1] - pot.dV(y[0]);
    return d;
  };
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;

  DetPath path;
  path.nodes.push_back(s0);
  Vec<2> y0;
  y0 << s0.X, s0.P;
  integrate_dopri5<2>(rhs, s0.t, y0, t_end, opt, [&](const DenseStep<2>& step) {
    path.steps.push_back(step);
    path.nodes.push_back({step.t1, step.y1[0], step.y1[1]});
    return true;
  });
  return path;
}

std::string to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::Locked: return "locked";
    case OrbitClass::Running: return "running";
    case OrbitClass::Critical: return "critical";
  }
  return "?";
}

OrbitClass classify_orbit(double gamma, double alpha, double tol) {
  if (alpha >= 1.0) return OrbitClass::Running;
  if (!(alpha > 0.0)) throw ParamError("classify_orbit: alpha must be positive");
  const SaddleAlgebra sys = saddle_algebra(gamma, alpha);
  const auto pot = sys.potential();
  auto rhs = [&](double, const Vec<2>& y) {
    Vec<2> d;
    d << y[1], -gamma * y[1] - pot.dV(y[0]);
    return d;
  };
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-16;

  Vec<2> y0;
  y0 << kLaunchOffset, sys.lambda_plus * kLaunchOffset;
  OrbitClass result = OrbitClass::Critical;
  integrate_dopri5<2>(rhs, 0.0, y0, 5000.0, opt, [&](const DenseStep<2>& s) {
    const bool fell = s.y1[1] <= 0.0;
    const bool passed = s.y1[0] >= kTwoPi;
    if (!fell && !passed) return true;
    double t_fall = std::numeric_limits<double>::infinity();
    double t_pass = t_fall;
    if (fell) t_fall = locate_root(s, [](const Vec<2>& y) { return y[1]; });
    if (passed) t_pass = locate_root(s, [](const Vec<2>& y) { return y[0] - kTwoPi; });
    if (t_fall <= t_pass) {
      result = OrbitClass::Locked;
    } else {
      const double p_end = s(t_pass)[1];
      result = std::abs(p_end) < tol ? OrbitClass::Critical : OrbitClass::Running;
    }
    return false;
  });
  return result;
}

namespace {

// P_left(pi) - P_right(pi) for the two saddle branches of well [0, 2 pi].
double branch_mismatch(double gamma, double alpha) {
  const SaddleAlgebra sys = saddle_algebra(gamma, alpha);
  const auto pot = sys.potential();
  auto rhs = [&](double u, const Vec<1>& y) {
    Vec<1> d;
    d << -gamma - pot.dV(u) / y[0];
    return d;
  };
  auto positive = [](const DenseStep<1>& s) { return s.y1[0] > 0.0; };
  OdeOptions opt = orbit_options();
  Vec<1> yl, yr;
  yl << branch_seed(sys, sys.lambda_plus, kLaunchOffset);
  yr << branch_seed(sys, sys.lambda_minus, -kLaunchOffset);
  const DenseStep<1> l = integrate_dopri5<1>(rhs, kLaunchOffset, yl, kPi, opt, positive);
  const DenseStep<1> r = integrate_dopri5<1>(rhs, kTwoPi - kLaunchOffset, yr, kPi, opt, positive);
  if (l.t1 != kPi || r.t1 != kPi) return std::numeric_limits<double>::quiet_NaN();
  return l.y1[0] - r.y1[0];
}

}  // namespace

CriticalTilt critical_tilt(double gamma, double tol_alpha) {
  if (!(gamma > 0.0 && gamma <= 0.5)) throw ParamError("critical_tilt: gamma must lie in (0, 0.5]");
  if (!(tol_alpha >= 1e-12)) throw ParamError("critical_tilt: tol_alpha must be >= 1e-12");

  CriticalTilt out;
  double lo = 0.0;
  double hi = std::min(1.0 - 1e-6, 4.0 * gamma);
  const OrbitClass at_hi = classify_orbit(gamma, hi, 0.0);
  const OrbitClass at_lo = classify_orbit(gamma, tol_alpha, 0.0);
  if (at_hi != OrbitClass::Running || at_lo != OrbitClass::Locked) {
    std::ostringstream os;
    os << "critical_tilt: no Locked/Running sign change on (0, " << hi << ") for gamma = " << gamma;
    throw ParamError(os.str());
  }
  while (hi - lo > tol_alpha) {
    const double mid = 0.5 * (lo + hi);
    ++out.iterations;
    const OrbitClass c = classify_orbit(gamma, mid, 0.0);
    if (c == OrbitClass::Locked) {
      lo = mid;
    } else if (c == OrbitClass::Running) {
      hi = mid;
    } else {
      lo = hi = mid;
    }
  }
  out.lower = lo;
  out.upper = hi;
  out.alpha = 0.5 * (lo + hi);

  // Polish inside the bracket on the continuous branch mismatch.
  double a = lo, b = hi;
  double fa = branch_mismatch(gamma, a), fb = branch_mismatch(gamma, b);
  if (std::isfinite(fa) && std::isfinite(fb) && fa * fb < 0.0) {
    int side = 0;
    for (int it = 0; it < 60 && b - a > 1e-16; ++it) {
      const double c = (a * fb - b * fa) / (fb - fa);
      const double fc = branch_mismatch(gamma, c);
      if (!std::isfinite(fc) || fc == 0.0) {
        if (fc == 0.0) a = b = c;
        break;
      }
      if ((fc > 0) == (fb > 0)) {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
    out.alpha = std::abs(fa) < std::abs(fb) ? a : b;
  }
  return out;
}

double OrbitTable::p_at(double x) const {
  if (x < x_min() || x > x_max()) throw std::domain_error("OrbitTable: x outside tabulated range");
  return spline(x);
}

double OrbitTable::slope_at(double x) const {
  if (x < x_min() || x > x_max()) throw std::domain_error("OrbitTable: x outside tabulated range");
  return spline.derivative(x);
}

OrbitTable heteroclinic_table(const SaddleAlgebra& sys, int n_grid, double delta0, int k) {
  if (n_grid < 256) throw std::invalid_argument("heteroclinic_table: n_grid must be >= 256");
  if (!(delta0 > 0.0 && delta0 < 1e-3)) throw std::invalid_argument("heteroclinic_table: delta0 out of range");
  if (n_grid % 2 == 0) ++n_grid;  // keep a node at the junction

  const auto pot = sys.potential();
  const double gamma = sys.gamma;
  // State (P, flux) as functions of the local coordinate u in [0, 2 pi].
  auto rhs = [&](double u, const Vec<2>& y) {
    Vec<2> d;
    d << -gamma - pot.dV(u) / y[0], y[0];
    return d;
  };

  std::vector<double> u(n_grid), p(n_grid, 0.0);
  for (int i = 0; i < n_grid; ++i) u[i] = kPi * (1.0 - std::cos(kPi * i / (n_grid - 1)));
  u.front() = 0.0;
  u.back() = kTwoPi;
  const int mid = (n_grid - 1) / 2;
  u[mid] = kPi;

  auto fail_on_zero = [&](const DenseStep<2>& s) {
    if (s.y1[0] <= 0.0) {
      std::ostringstream os;
      os << "heteroclinic_table: orbit reaches p = 0 at x = " << s.t1 + kTwoPi * (k - 1)
         << "; alpha = " << sys.alpha << " is not critical enough, tighten tol_alpha";
      throw IntegrationError(os.str());
    }
  };

  // Left branch, forward from the left saddle.
  Vec<2> yl;
  yl << branch_seed(sys, sys.lambda_plus, delta0), 0.0;
  int next = 1;
  const DenseStep<2> left_end = integrate_dopri5<2>(rhs, delta0, yl, kPi, orbit_options(), [&](const DenseStep<2>& s) {
    fail_on_zero(s);
    while (next <= mid && u[next] <= s.t1) {
      p[next] = s(u[next])[0];
      ++next;
    }
    return true;
  });

  // Right branch, backward from the right saddle.
  Vec<2> yr;
  yr << branch_seed(sys, sys.lambda_minus, -delta0), 0.0;
  int prev = n_grid - 2;
  const DenseStep<2> right_end =
      integrate_dopri5<2>(rhs, kTwoPi - delta0, yr, kPi, orbit_options(), [&](const DenseStep<2>& s) {
        fail_on_zero(s);
        while (prev >= mid && u[prev] >= s.t1) {
          if (prev == mid) break;
          p[prev] = s(u[prev])[0];
          --prev;
        }
        return true;
      });

  const double p_left = left_end.y1[0];
  const double p_right = right_end.y1[0];
  const double mismatch = p_left - p_right;
  if (std::abs(mismatch) > 1e-6 * std::max(1.0, p_left)) {
    std::ostringstream os;
    os << "heteroclinic_table: branches miss each other by " << mismatch
       << " at the well midpoint; alpha = " << sys.alpha << " is not critical enough, tighten tol_alpha";
    throw IntegrationError(os.str());
  }
  p[mid] = 0.5 * (p_left + p_right);

  OrbitTable t;
  t.k = k;
  t.kind = OrbitKind::Heteroclinic;
  t.alpha_used = sys.alpha;
  t.gamma = sys.gamma;
  t.left_slope = sys.lambda_plus;
  t.right_slope = sys.lambda_minus;
  t.flux_integral = left_end.y1[1] - right_end.y1[1] +
                    0.5 * (sys.lambda_plus - sys.lambda_minus) * delta0 * delta0;

  std::vector<double> slopes(n_grid);
  slopes.front() = sys.lambda_plus;
  slopes.back() = sys.lambda_minus;
  for (int i = 1; i + 1 < n_grid; ++i) slopes[i] = -gamma - pot.dV(u[i]) / p[i];

  t.grid.resize(n_grid);
  for (int i = 0; i < n_grid; ++i) t.grid[i] = u[i] + kTwoPi * (k - 1);
  t.grid.front() = kTwoPi * (k - 1);
  t.grid.back() = kTwoPi * k;
  t.p_values = p;
  t.spline = HermiteSpline(t.grid, t.p_values, slopes);
  return t;
}

OrbitTable generic_orbit_table(const SaddleAlgebra& sys, double x_start, double p_start, double x_end,
                               int n_grid) {
  if (!(x_end > x_start)) throw std::invalid_argument("generic_orbit_table: need x_end > x_start");
  if (!(p_start > 0.0)) throw std::invalid_argument("generic_orbit_table: p_start must be positive");
  if (n_grid < 2) throw std::invalid_argument("generic_orbit_table: n_grid must be >= 2");
  const auto pot = sys.potential();
  const double gamma = sys.gamma;
  auto rhs = [&](double x, const Vec<2>& y) {
    Vec<2> d;
    d << -gamma - pot.dV(x) / y[0], y[0];
    return d;
  };

  OrbitTable t;
  t.kind = OrbitKind::Generic;
  t.alpha_used = sys.alpha;
  t.gamma = gamma;
  t.k = static_cast<int>(std::floor(x_start / kTwoPi)) + 1;
  t.grid.resize(n_grid);
  t.p_values.resize(n_grid);
  for (int i = 0; i < n_grid; ++i) t.grid[i] = x_start + (x_end - x_start) * i / (n_grid - 1);
  t.grid.back() = x_end;
  t.p_values[0] = p_start;

  Vec<2> y0;
  y0 << p_start, 0.0;
  int next = 1;
  const DenseStep<2> last = integrate_dopri5<2>(rhs, x_start, y0, x_end, orbit_options(), [&](const DenseStep<2>& s) {
    if (s.y1[0] <= 0.0) {
      std::ostringstream os;
      os << "generic_orbit_table: orbit reaches p = 0 at x = " << s.t1;
      throw IntegrationError(os.str());
    }
    while (next < n_grid && t.grid[next] <= s.t1) {
      t.p_values[next] = s(t.grid[next])[0];
      ++next;
    }
    return true;
  });
  t.p_values.back() = last.y1[0];
  t.flux_integral = last.y1[1];

  std::vector<double> slopes(n_grid);
  for (int i = 0; i < n_grid; ++i) slopes[i] = -gamma - pot.dV(t.grid[i]) / t.p_values[i];
  t.left_slope = slopes.front();
  t.right_slope = slopes.back();
  t.spline = HermiteSpline(t.grid, t.p_values, slopes);
  return t;
}

double orbit_residual(const OrbitTable& table, const SaddleAlgebra& sys, double x) {
  const double p = table.p_at(x);
  return std::abs(table.slope_at(x) + sys.gamma + sys.potential().dV(x) / p);
}

double omega_along(const OrbitTable& table, double x) {
  if (x < table.x_min() || x > table.x_max()) throw std::domain_error("omega_along: x outside table range");
  return table.spline.derivative(x);
}

double riccati_residual(const OrbitTable& table, const SaddleAlgebra& sys, double x) {
  const double p = table.p_at(x);
  const double w = table.spline.derivative(x);
  const double dw = table.spline.second_derivative(x);
  return std::abs(p * dw + w * w + sys.gamma * w + sys.potential().d2V(x));
}

SigmaValues sigma_functionals(const OrbitTable& table, const SaddleAlgebra& sys, double x_start,
                              const std::vector<double>& xs) {
  if (x_start < table.x_min() || x_start > table.x_max())
    throw std::domain_error("sigma_functional: x_start outside table range");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < x_start || xs[i] > table.x_max())
      throw std::domain_error("sigma_functional: evaluation point outside [x_start, table end]");
    if (i > 0 && xs[i] < xs[i - 1]) throw std::invalid_argument("sigma_functional: points must be sorted");
  }

  SigmaValues out;
  out.x = xs;
  out.r1.assign(xs.size(), 0.0);
  out.r2.assign(xs.size(), 0.0);
  out.y1.assign(xs.size(), 0.0);
  out.y2.assign(xs.size(), 0.0);
  if (xs.empty()) return out;

  const auto pot = sys.potential();
  const double gamma = sys.gamma;
  // State: P, Sigma_r^(1), Sigma_r^(2), K1, L, K2 with Sigma_y^(1) = P K1, Sigma_y^(2) = P^2 K2.
  auto rhs = [&](double x, const Vec<6>& s) {
    const double p = s[0];
    const double dv = pot.dV(x);
    const double ip = 1.0 / p;
    const double ip2 = ip * ip;
    const double g = dv * ip2;
    Vec<6> d;
    d << -gamma - dv * ip, ip + g * s[1], ip + 2.0 * g * s[2], s[1] * ip2, g * s[4] + s[2] * ip2, 2.0 * s[4] * ip2;
    return d;
  };

  double x0 = x_start;
  Vec<6> s0 = Vec<6>::Zero();
  bool y_available = true;
  const double dist = x_start - table.left_saddle();
  if (dist < kSaddleRegularisation) {
    // Linear asymptotics P = lambda_plus u on [x_start, left saddle + reg].
    x0 = table.left_saddle() + kSaddleRegularisation;
    const double ratio = dist / kSaddleRegularisation;
    for (int n = 1; n <= 2; ++n) {
      const double m = n * (1.0 + sys.theta);
      s0[n] = (1.0 - std::pow(ratio, m)) / (sys.lambda_plus * m);
    }
    y_available = false;
  }
  s0[0] = table.p_at(x0);

  std::size_t next = 0;
  auto record = [&](std::size_t i, const Vec<6>& s) {
    if (xs[i] <= x_start) return;  // empty integral
    out.r1[i] = s[1];
    out.r2[i] = s[2];
    out.y1[i] = y_available ? s[0] * s[3] : kNaN;
    out.y2[i] = y_available ? s[0] * s[0] * s[5] : kNaN;
  };
  while (next < xs.size() && xs[next] <= x0) {
    if (xs[next] > x_start) {
      // Inside the regularised segment: closed form only.
      const double r = (xs[next] - table.left_saddle()) / kSaddleRegularisation;
      Vec<6> s = Vec<6>::Zero();
      for (int n = 1; n <= 2; ++n) {
        const double m = n * (1.0 + sys.theta);
        s[n] = (1.0 - std::pow(dist / (r * kSaddleRegularisation), m)) / (sys.lambda_plus * m);
      }
      record(next, s);
    }
    ++next;
  }
  if (next == xs.size()) return out;

  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-15;
  integrate_dopri5<6>(rhs, x0, s0, xs.back(), opt, [&](const DenseStep<6>& st) {
    if (st.y1[0] <= 0.0) throw IntegrationError("sigma_functional: orbit reaches p = 0 before the end point");
    while (next < xs.size() && xs[next] <= st.t1) {
      record(next, xs[next] == st.t1 ? Vec<6>(st.y1) : st(xs[next]));
      ++next;
    }
    return true;
  });
  return out;
}

double sigma_functional(SigmaKind kind, int n, const OrbitTable& table, const SaddleAlgebra& sys,
                        double x_start, double x_end) {
  if (n != 1 && n != 2) throw std::invalid_argument("sigma_functional: order must be 1 or 2");
  if (!(x_end >= x_start)) throw std::domain_error("sigma_functional: need x_start <= x_end");
  if (x_end == x_start) return 0.0;
  if (kind == SigmaKind::Y && x_start - table.left_saddle() < kSaddleRegularisation)
    throw std::domain_error("sigma_functional: Sigma_y diverges when started at the saddle");
  const SigmaValues v = sigma_functionals(table, sys, x_start, {x_end});
  if (kind == SigmaKind::R) return n == 1 ? v.r1[0] : v.r2[0];
  return n == 1 ? v.y1[0] : v.y2[0];
}

WindowSpan approach_window(const OrbitTable& table, const SaddleAlgebra& sys, double eta) {
  return {table.left_saddle() + eta, table.right_saddle() - eta / (2.0 * (sys.lambda_plus - sys.lambda_minus))};
}

RhoProfile rho_propagation(const OrbitTable& table_star, const SaddleAlgebra& sys, double rho0, double x_start,
                           double x_end, int n_out) {
  const double eta = x_start - table_star.left_saddle();
  if (!(eta > 0.0)) throw std::domain_error("rho_propagation: x_start must lie right of the left saddle");
  if (std::abs(rho0) > 0.01 * eta)
    throw std::domain_error("rho_propagation: |rho0| must not exceed 0.01 * (x_start - saddle)");
  if (!(x_end > x_start) || x_end > table_star.x_max())
    throw std::domain_error("rho_propagation: need x_start < x_end within the table");
  if (n_out < 2) n_out = 2;

  const auto pot = sys.potential();
  const double gamma = sys.gamma;
  auto rhs = [&](double x, const Vec<2>& y) {
    const double dv = pot.dV(x);
    Vec<2> d;
    d << -gamma - dv / y[0], dv * y[1] / (y[0] * (y[0] + y[1]));
    return d;
  };

  RhoProfile out;
  out.x.resize(n_out);
  for (int i = 0; i < n_out; ++i) out.x[i] = x_start + (x_end - x_start) * i / (n_out - 1);
  out.x.back() = x_end;
  out.rho.assign(n_out, kNaN);
  out.rho[0] = rho0;
  if (rho0 == 0.0) {
    std::fill(out.rho.begin(), out.rho.end(), 0.0);
    return out;
  }

  Vec<2> y0;
  y0 << table_star.p_at(x_start), rho0;
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-30;
  int next = 1;
  integrate_dopri5<2>(rhs, x_start, y0, x_end, opt, [&](const DenseStep<2>& s) {
    if (s.y1[0] + s.y1[1] <= 0.0 || s.y1[0] <= 0.0) {
      out.trapped = true;
      return false;
    }
    while (next < n_out && out.x[next] <= s.t1) {
      out.rho[next] = out.x[next] == s.t1 ? s.y1[1] : s(out.x[next])[1];
      ++next;
    }
    return true;
  });
  if (out.trapped) {
    out.x.resize(next);
    out.rho.resize(next);
  }
  return out;
}

namespace {

struct BothRoutes {
  std::vector<double> x, t, r_time, y_time, r_space, y_space;
};

BothRoutes variance_routes(const ModelParams& params, const OrbitTable& table, WindowSpan span, int n_out) {
  if (!(span.x_end > span.x_start)) throw std::domain_error("variance profile: empty span");
  if (n_out < 1) n_out = 1;
  BothRoutes b;
  for (int i = 1; i <= n_out; ++i) b.x.push_back(span.x_start + (span.x_end - span.x_start) * i / n_out);
  b.x.back() = span.x_end;

  const SigmaValues sv = sigma_functionals(table, params, span.x_start, b.x);
  const double e2 = params.epsilon * params.epsilon;
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    b.r_space.push_back(e2 * sv.r2[i]);
    b.y_space.push_back(e2 * sv.y2[i]);
  }

  // Time route: X, P, omega (Riccati), N = sigma_r^2/eps^2, M, Y = sigma_y^2/eps^2.
  const auto pot = params.potential();
  const double gamma = params.gamma;
  auto rhs = [&](double, const Vec<6>& s) {
    const double w = s[2];
    Vec<6> d;
    d << s[1], -gamma * s[1] - pot.dV(s[0]), -w * w - gamma * w - pot.d2V(s[0]), 1.0 - 2.0 * (w + gamma) * s[3],
        -gamma * s[4] + s[3], 2.0 * w * s[5] + 2.0 * s[4];
    return d;
  };
  Vec<6> s0 = Vec<6>::Zero();
  s0[0] = span.x_start;
  s0[1] = table.p_at(span.x_start);
  s0[2] = -gamma - pot.dV(s0[0]) / s0[1];

  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-15;
  std::size_t next = 0;
  integrate_dopri5<6>(rhs, 0.0, s0, 1e5, opt, [&](const DenseStep<6>& st) {
    if (st.y1[1] <= 0.0) throw IntegrationError("variance profile: deterministic path stalls before x_end");
    while (next < b.x.size() && st.y1[0] >= b.x[next]) {
      const double target = b.x[next];
      const double tr = locate_root(st, [target](const Vec<6>& y) { return y[0] - target; });
      const Vec<6> s = st(tr);
      b.t.push_back(tr);
      b.r_time.push_back(e2 * s[3]);
      b.y_time.push_back(e2 * s[5]);
      ++next;
    }
    return next < b.x.size();
  });
  if (next < b.x.size()) throw IntegrationError("variance profile: path did not reach x_end");
  return b;
}

VarianceProfile finish(std::vector<double> x, std::vector<double> t, std::vector<double> by_time,
                       std::vector<double> by_space, double rel_tol, const char* name) {
  VarianceProfile vp;
  vp.x = std::move(x);
  vp.t = std::move(t);
  vp.by_time = std::move(by_time);
  vp.by_space = std::move(by_space);
  for (std::size_t i = 0; i < vp.x.size(); ++i) {
    const double denom = std::max(std::abs(vp.by_space[i]), std::numeric_limits<double>::min());
    vp.max_rel_gap = std::max(vp.max_rel_gap, std::abs(vp.by_time[i] - vp.by_space[i]) / denom);
  }
  if (!(vp.max_rel_gap <= rel_tol)) {
    std::ostringstream os;
    os << name << ": time and space integrals disagree, relative gap " << vp.max_rel_gap << " > " << rel_tol;
    throw ConsistencyError(os.str());
  }
  return vp;
}

}  // namespace

VarianceProfile sigma_r_profile(const ModelParams& params, const OrbitTable& table, WindowSpan span, int n_out,
                                double rel_tol) {
  BothRoutes b = variance_routes(params, table, span, n_out);
  return finish(std::move(b.x), std::move(b.t), std::move(b.r_time), std::move(b.r_space), rel_tol,
                "sigma_r_profile");
}

VarianceProfile sigma_y_profile(const ModelParams& params, const OrbitTable& table, WindowSpan span, int n_out,
                                double rel_tol) {
  BothRoutes b = variance_routes(params, table, span, n_out);
  return finish(std::move(b.x), std::move(b.t), std::move(b.y_time), std::move(b.y_space), rel_tol,
                "sigma_y_profile");
}

}  // namespace wash
