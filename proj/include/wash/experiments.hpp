#pragma once

#include "wash/deterministic.hpp"
#include "wash/params.hpp"
#include "wash/sde.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wash {

// ---------------------------------------------------------------------------
// Statistics helpers

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width(double center) const { return std::max(hi - center, center - lo); }
};

/// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
Interval wilson_interval(long successes, long n, double z = 1.959963984540054);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  long n = 0;
};

/// Mean and sample standard deviation; the input is sorted first so the
/// result does not depend on the order of the values.
MeanSd ordered_mean_sd(std::vector<double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line y = intercept + slope x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Critical regime: alpha_gamma, the heteroclinic table and derived parameters

struct Regime {
  CriticalTilt tilt;
  SaddleAlgebra sys;
  OrbitTable table;  // well [0, 2 pi]; shifted copies serve every other well
};

Regime critical_regime(double gamma, int n_grid = kDefaultOrbitGrid);

/// Start (-pi, P*_0(-pi)) on the heteroclinic of the well left of saddle 0.
InitialCondition default_initial_condition(const Regime& r);

// ---------------------------------------------------------------------------
// Batches

struct BatchOptions {
  long n_trials = 10000;
  std::uint64_t master_seed = 1;
  SimSettings sim;
  int threads = 0;  // 0: hardware concurrency
};

struct BatchSummary {
  ModelParams params;
  double dt = 0.0;
  int k_max = 0;
  std::uint64_t master_seed = 0;
  long n_trials = 0;

  std::vector<long> counts;  // counts[k]: trapped trials with N = k, k = 0..k_max
  std::vector<double> p_hat;
  std::vector<Interval> ci;
  long trapped = 0, cap_hit = 0, k_max_hits = 0;

  MeanSd crossing_time;  // T_{k+1} - S_k over all events
  MeanSd z_at_S;
  MeanSd v_at_T;
  // v(T) - v(S) exp(l- (T - S)) over events with T > S: the noise part of v at exit.
  MeanSd v_noise_at_T;
  long immediate_exits = 0;  // events with |z(S_k)| >= eta already at entry
  long n_events = 0;
  double coupling_gap_q95 = 0.0;  // 95% quantile of CrossingEvent::coupling_gap

  bool unreliable = false;  // more than 1% cap_hit
};

/// Simulates n_trials independent trials; trial i uses trial_seed(master_seed, i).
std::vector<TrialRecord> run_trials(const ModelParams& m, const InitialCondition& init, const BatchOptions& opt);

/// Aggregates trial records. Records are sorted by seed first, so any
/// permutation of the same records gives an identical summary.
BatchSummary summarize(const ModelParams& m, const BatchOptions& opt, std::vector<TrialRecord> records);

BatchSummary run_batch(const ModelParams& m, const InitialCondition& init, const BatchOptions& opt,
                       std::vector<TrialRecord>* records_out = nullptr);

// ---------------------------------------------------------------------------
// Geometric law

struct GofRow {
  std::string label;  // "0", "1", ..., ">=5"
  double p_hat = 0.0;
  double reference = 0.0;
  double band = 0.0;
  bool pass = false;
};

struct GofReport {
  std::vector<GofRow> rows;
  double total_mass = 0.0;  // fraction of trials that were trapped
  bool mass_pass = false;
  bool pass = false;
};

/// |p_hat[k] - 2^-(k+1)| against max(3 Wilson half-width, slack) for
/// k < pool_from, the pooled tail P{N >= pool_from} against 2^-pool_from, and
/// total trapped mass >= 1 - mass_tol.
GofReport geometric_gof(const BatchSummary& s, double slack = 0.06, int pool_from = 5, double mass_tol = 0.01);

// ---------------------------------------------------------------------------
// Variance validation

struct VarianceCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;  // absolute band around target, or bound
  bool pass = false;
};

struct OuVarianceReport {
  std::vector<VarianceCheck> checks;
  bool pass = false;
};

/// Exact OU pair (zbar, vbar) from 0 driven by shared increments; empirical
/// variances at t in {0.5, 1, 2}/l+ against the closed forms, within 3 SE.
OuVarianceReport ou_variance_check(const ModelParams& m, long n_samples, std::uint64_t seed, int steps = 200);

/// Spread of z_k(S_k) (ratio to sigma_eps in [0.1, 10], |mean| <= safety sigma_tilde)
/// and the noise part of v_k(T_{k+1}) (ratio to eps in [0.1, 10], mean v <= safety sigma_bar).
std::vector<VarianceCheck> trial_spread_checks(const BatchSummary& s, double safety = 10.0);

// ---------------------------------------------------------------------------
// Time scale

struct TimescaleReport {
  std::vector<double> epsilons;
  std::vector<double> mean_times;
  std::vector<double> sem;  // standard error of each mean
  LinearFit fit;            // mean time against ln(1/eps)
  double predicted_slope = 0.0;
  double relative_error = 0.0;
  bool monotone = false;
  bool pass = false;
};

/// Predicted slope (1 - nu (2+theta)/(1+theta)) / l+.
double timescale_slope(const SaddleAlgebra& sys, double nu);

TimescaleReport timescale_scan(const std::vector<BatchSummary>& batches, double rel_tol = 0.25, double min_r2 = 0.95);

// ---------------------------------------------------------------------------
// Trapping box

struct TrappingReport {
  long n_trapped = 0;
  long inside = 0;
  double fraction = 0.0;
  double slack = 0.0;
};

/// Closed box at T_{N+1}: x <= 2N pi - eta/(l+ - l-) (1 - s) and
/// p <= -l+ eta/(l+ - l-) (1 - |l-| s / l+), s = sigma_bar eps^-xi / eta.
bool in_trapping_box(const ModelParams& m, int N, double x, double p, double xi = 0.05);
TrappingReport trapping_check(const ModelParams& m, const std::vector<TrialRecord>& records, double xi = 0.05);

// ---------------------------------------------------------------------------
// Appendix checks

struct TailRow {
  double lambda = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct MarcusSheppReport {
  double t_start = 0.0, t_end = 0.0;
  int grid = 0;
  long n_samples = 0;
  std::vector<TailRow> rows;
  bool pass = false;
};

/// P{sup_I |vbar(t)|/sigma_v(t) >= lambda} for the OU vbar from 0 sampled on
/// `grid` points of I = [1/|l-|, 2/|l-|], against 2 exp(-lambda^2 (1 - delta)/2).
MarcusSheppReport marcus_shepp_check(const ModelParams& m, const std::vector<double>& lambdas, long n_samples,
                                     std::uint64_t seed, double delta = 0.1, int grid = 256);

/// Scalar drift c(x) compared with its linearisation a x + b.
struct ScalarDrift {
  std::function<double(double)> c;
  double a = 0.0;
  double b = 0.0;
};

struct ComparisonReport {
  long n_paths = 0;
  long checked_steps = 0;   // steps after the sign identity was established in a segment
  long violations = 0;      // checked steps with sign(Delta) = -sign(delta)
  long lag_steps = 0;       // steps at the start of a segment before the identity holds
  long max_lag = 0;         // longest such stretch
  bool pass = false;
};

/// Euler paths x (drift c) and X (drift a X + b) with shared increments from
/// x0. With Delta = x - X and delta = c(x) - (a x + b) one has
/// Delta_{n+1} = (1 + a dt) Delta_n + delta_n dt. Within every stretch where
/// delta keeps its sign, once sign(Delta) = sign(delta) (or Delta = 0) the
/// identity must hold for the rest of the stretch; Delta at rounding level
/// counts as zero.
ComparisonReport comparison_lemma_check(const ScalarDrift& drift, double x0, double xi, double t_end, double dt,
                                        long n_paths, std::uint64_t seed);

/// Drift -V'(x) near saddle 0 and its linearisation beta x.
ScalarDrift saddle_drift(const SaddleAlgebra& sys);

// ---------------------------------------------------------------------------
// Scaling exponents of the orbit functionals

struct ExponentFit {
  std::string name;
  std::vector<double> eta;
  std::vector<double> values;
  LinearFit fit;  // log(value) against log(eta)
  double predicted = 0.0;
  bool upper_bound_only = false;  // predicted is a bound on |slope|
  bool pass = false;
};

struct ScalingReport {
  std::vector<ExponentFit> fits;
  bool pass = false;
};

/// Fits over the approach window [left + eta, right - eta/(2(l+ - l-))] for
/// Sigma_r^(1), Sigma_r^(2), Sigma_y^(2) and the rho ratio.
ScalingReport scaling_suite(const Regime& r, const std::vector<double>& etas, double rel_tol = 0.10,
                            double min_r2 = 0.95);

}  // namespace wash
