#pragma once

#include "wash/interp.hpp"
#include "wash/ode.hpp"
#include "wash/params.hpp"

#include <string>
#include <vector>

namespace wash {

/// Point of the noiseless flow X' = P, P' = -gamma P - V'(X).
struct DetState {
  double t = 0.0;
  double X = 0.0;
  double P = 0.0;
};

/// Accepted steps of an adaptive integration, with dense output between them.
struct DetPath {
  std::vector<DetState> nodes;
  std::vector<DenseStep<2>> steps;

  DetState at(double t) const;
  const DetState& back() const { return nodes.back(); }
};

/// Adaptive DOPRI5 integration of the noiseless system on [s0.t, t_end].
DetPath integrate_det(const SaddleAlgebra& sys, const DetState& s0, double t_end, double tol);

enum class OrbitClass { Locked, Running, Critical };
std::string to_string(OrbitClass c);

/// Launch offset along the unstable eigen-direction of a saddle.
inline constexpr double kLaunchOffset = 1e-8;

/// Follows the unstable manifold of the saddle at 0 (launched at offset
/// kLaunchOffset along slope lambda_plus) and reports whether it falls back
/// (Locked), overshoots the saddle at 2 pi (Running), or arrives there with
/// |P| < tol (Critical). Tilts alpha >= 1 are Running unconditionally.
OrbitClass classify_orbit(double gamma, double alpha, double tol);

struct CriticalTilt {
  double alpha = 0.0;  // bracket midpoint
  double lower = 0.0;  // classified Locked
  double upper = 0.0;  // classified Running
  int iterations = 0;
};

/// Bisection on classify_orbit over (0, min(1 - 1e-6, 4 gamma)).
CriticalTilt critical_tilt(double gamma, double tol_alpha = 1e-10);

enum class OrbitKind { Heteroclinic, Generic };

/// Tabulated phase-plane orbit p = P(x) on one well [2(k-1)pi, 2k pi].
struct OrbitTable {
  int k = 1;
  std::vector<double> grid;
  std::vector<double> p_values;
  double left_slope = 0.0;
  double right_slope = 0.0;
  OrbitKind kind = OrbitKind::Generic;
  double alpha_used = 0.0;
  double gamma = 0.0;
  double flux_integral = 0.0;  // integral of p over the tabulated range
  HermiteSpline spline;

  double x_min() const { return grid.front(); }
  double x_max() const { return grid.back(); }
  double left_saddle() const { return kTwoPi * (k - 1); }
  double right_saddle() const { return kTwoPi * k; }
  double p_at(double x) const;
  double slope_at(double x) const;
};

/// Default heteroclinic grid size.
inline constexpr int kDefaultOrbitGrid = 4097;

/// Heteroclinic orbit of well k at the critical tilt. The left branch is
/// integrated forward from the left saddle and the right branch backward from
/// the right saddle (both along stable directions of the x-flow); they must
/// meet at the well midpoint.
OrbitTable heteroclinic_table(const SaddleAlgebra& sys, int n_grid = kDefaultOrbitGrid,
                              double delta0 = kLaunchOffset, int k = 1);

/// Orbit through (x_start, p_start) continued to x_end on a uniform grid.
OrbitTable generic_orbit_table(const SaddleAlgebra& sys, double x_start, double p_start, double x_end,
                               int n_grid = 1025);

/// |dP/dx + gamma + V'(x)/P| of the interpolated table at x.
double orbit_residual(const OrbitTable& table, const SaddleAlgebra& sys, double x);

/// omega = d/dx P(x) of the tabulated orbit.
double omega_along(const OrbitTable& table, double x);

/// |P omega' + omega^2 + gamma omega + V''| at x: the Riccati equation written in x.
double riccati_residual(const OrbitTable& table, const SaddleAlgebra& sys, double x);

enum class SigmaKind { R, Y };

/// Regularisation radius: within this distance of the left saddle the
/// r-functional is started from its linear near-saddle asymptotics.
inline constexpr double kSaddleRegularisation = 1e-6;

/// Sigma_r^(n)[P, x_start](x_end) or Sigma_y^(n)[P, x_start](x_end), n in {1, 2},
/// along the orbit passing through (x_start, table.p_at(x_start)).
double sigma_functional(SigmaKind kind, int n, const OrbitTable& table, const SaddleAlgebra& sys,
                        double x_start, double x_end);

/// All four functionals sampled at increasing positions xs (each > x_start).
struct SigmaValues {
  std::vector<double> x;
  std::vector<double> r1, r2, y1, y2;
};
SigmaValues sigma_functionals(const OrbitTable& table, const SaddleAlgebra& sys, double x_start,
                              const std::vector<double>& xs);

/// Window endpoints x_k = left saddle + eta and x_k' = right saddle - eta/(2(l+ - l-)).
struct WindowSpan {
  double x_start = 0.0;
  double x_end = 0.0;
};
WindowSpan approach_window(const OrbitTable& table, const SaddleAlgebra& sys, double eta);

struct RhoProfile {
  std::vector<double> x;
  std::vector<double> rho;
  bool trapped = false;  // offset orbit reached p = 0
};

/// rho(x) = P(x) - P*(x) for the orbit launched at P*(x_start) + rho0.
/// Requires |rho0| <= 0.01 (x_start - left saddle).
RhoProfile rho_propagation(const OrbitTable& table_star, const SaddleAlgebra& sys, double rho0,
                           double x_start, double x_end, int n_out = 257);

/// Variance of the linearised far-field processes along a deterministic path,
/// computed in time (Riccati omega along the path) and in space (epsilon^2
/// times the Sigma^(2) functional). Both routes are reported.
struct VarianceProfile {
  std::vector<double> x;         // X_k(t) at the sample points
  std::vector<double> t;         // elapsed time since T_k
  std::vector<double> by_time;   // sigma^2 via time integrals
  std::vector<double> by_space;  // epsilon^2 Sigma^(2)
  double max_rel_gap = 0.0;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConsistencyError when the two routes disagree beyond rel_tol.
VarianceProfile sigma_r_profile(const ModelParams& params, const OrbitTable& table, WindowSpan span,
                                int n_out = 65, double rel_tol = 1e-6);
VarianceProfile sigma_y_profile(const ModelParams& params, const OrbitTable& table, WindowSpan span,
                                int n_out = 65, double rel_tol = 1e-6);

}  // namespace wash
