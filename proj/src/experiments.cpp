#include "wash/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace wash {

Interval wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

MeanSd ordered_mean_sd(std::vector<double> values) {
  MeanSd out;
  out.n = static_cast<long>(values.size());
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (values.size() - 1));
  }
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more points");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = x[i];
    b(i) = y[i];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd res = b - A * c;
  const double ss_tot = (b.array() - b.mean()).square().sum();
  LinearFit f;
  f.intercept = c(0);
  f.slope = c(1);
  f.r2 = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
  return f;
}

Regime critical_regime(double gamma, int n_grid) {
  Regime r;
  r.tilt = critical_tilt(gamma);
  r.sys = saddle_algebra(gamma, r.tilt.alpha);
  r.table = heteroclinic_table(r.sys, n_grid);
  return r;
}

InitialCondition default_initial_condition(const Regime& r) {
  InitialCondition ic;
  ic.x = -kPi;
  ic.p = r.table.p_at(kPi);
  ic.k = 0;
  return ic;
}

std::vector<TrialRecord> run_trials(const ModelParams& m, const InitialCondition& init, const BatchOptions& opt) {
  if (opt.n_trials < 1) throw std::invalid_argument("run_trials: n_trials must be positive");
  std::vector<TrialRecord> out(static_cast<std::size_t>(opt.n_trials));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= opt.n_trials) return;
      try {
        out[static_cast<std::size_t>(i)] =
            simulate_trial(m, init, trial_seed(opt.master_seed, static_cast<std::uint64_t>(i)), opt.sim);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = opt.n_trials;
        return;
      }
    }
  };

  int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp<int>(threads, 1, static_cast<int>(std::min<long>(opt.n_trials, 256)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

BatchSummary summarize(const ModelParams& m, const BatchOptions& opt, std::vector<TrialRecord> records) {
  std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.T_final < b.T_final;
  });

  BatchSummary s;
  s.params = m;
  s.dt = opt.sim.dt;
  s.k_max = opt.sim.k_max;
  s.master_seed = opt.master_seed;
  s.n_trials = static_cast<long>(records.size());
  s.counts.assign(static_cast<std::size_t>(opt.sim.k_max) + 1, 0);

  std::vector<double> times, zs, vs, noise, gaps;
  for (const TrialRecord& r : records) {
    switch (r.outcome) {
      case Outcome::Trapped:
        ++s.trapped;
        if (r.N >= 0 && r.N <= opt.sim.k_max) ++s.counts[static_cast<std::size_t>(r.N)];
        break;
      case Outcome::CapHit: ++s.cap_hit; break;
      case Outcome::KMax: ++s.k_max_hits; break;
    }
    for (const CrossingEvent& e : r.events) {
      const double tau = e.T_k1 - e.S_k;
      times.push_back(tau);
      zs.push_back(e.z_at_S);
      vs.push_back(e.v_at_T);
      gaps.push_back(e.coupling_gap);
      if (tau > 0.0)
        noise.push_back(e.v_at_T - m.eta_eps * std::exp(m.lambda_minus * tau));
      else
        ++s.immediate_exits;
    }
  }
  s.n_events = static_cast<long>(times.size());
  s.crossing_time = ordered_mean_sd(times);
  s.z_at_S = ordered_mean_sd(zs);
  s.v_at_T = ordered_mean_sd(vs);
  s.v_noise_at_T = ordered_mean_sd(noise);
  if (!gaps.empty()) {
    std::sort(gaps.begin(), gaps.end());
    s.coupling_gap_q95 = gaps[static_cast<std::size_t>(0.95 * (gaps.size() - 1))];
  }

  for (std::size_t k = 0; k < s.counts.size(); ++k) {
    s.p_hat.push_back(s.n_trials > 0 ? static_cast<double>(s.counts[k]) / s.n_trials : 0.0);
    s.ci.push_back(wilson_interval(s.counts[k], s.n_trials));
  }
  s.unreliable = s.n_trials > 0 && s.cap_hit > 0.01 * s.n_trials;
  return s;
}

BatchSummary run_batch(const ModelParams& m, const InitialCondition& init, const BatchOptions& opt,
                       std::vector<TrialRecord>* records_out) {
  if (opt.n_trials < 100) throw std::invalid_argument("run_batch: n_trials must be at least 100");
  std::vector<TrialRecord> records = run_trials(m, init, opt);
  BatchSummary s = summarize(m, opt, records);
  if (records_out) *records_out = std::move(records);
  return s;
}

GofReport geometric_gof(const BatchSummary& s, double slack, int pool_from, double mass_tol) {
  GofReport g;
  const long n = s.n_trials;
  auto row = [&](std::string label, long count, double reference) {
    GofRow r;
    r.label = std::move(label);
    r.p_hat = n > 0 ? static_cast<double>(count) / n : 0.0;
    r.reference = reference;
    r.band = std::max(3.0 * wilson_interval(count, n).half_width(r.p_hat), slack);
    r.pass = std::abs(r.p_hat - r.reference) <= r.band;
    return r;
  };
  long tail = 0;
  for (std::size_t k = 0; k < s.counts.size(); ++k) {
    if (static_cast<int>(k) < pool_from)
      g.rows.push_back(row(std::to_string(k), s.counts[k], std::ldexp(1.0, -static_cast<int>(k) - 1)));
    else
      tail += s.counts[k];
  }
  // Non-trapped trials ran past k_max or the cap and belong to the tail as well.
  tail += s.k_max_hits;
  if (static_cast<int>(s.counts.size()) > pool_from)
    g.rows.push_back(row(">=" + std::to_string(pool_from), tail, std::ldexp(1.0, -pool_from)));
  g.total_mass = n > 0 ? static_cast<double>(s.trapped) / n : 0.0;
  g.mass_pass = g.total_mass >= 1.0 - mass_tol;
  g.pass = g.mass_pass && std::all_of(g.rows.begin(), g.rows.end(), [](const GofRow& r) { return r.pass; });
  return g;
}

OuVarianceReport ou_variance_check(const ModelParams& m, long n_samples, std::uint64_t seed, int steps) {
  if (n_samples < 2) throw std::invalid_argument("ou_variance_check: need at least two samples");
  steps = std::max(4, steps - steps % 4);
  const double t_end = 2.0 / m.lambda_plus;
  const double h = t_end / steps;
  const OuStep c(m, h);
  const int probes[3] = {steps / 4, steps / 2, steps};  // t = 0.5, 1, 2 over l+

  std::vector<double> z[3], v[3];
  for (auto& a : z) a.reserve(static_cast<std::size_t>(n_samples));
  for (auto& a : v) a.reserve(static_cast<std::size_t>(n_samples));
  NormalStream rng(seed);
  const double sqrt_h = std::sqrt(h);
  for (long i = 0; i < n_samples; ++i) {
    ZV s{0.0, 0.0};
    int probe = 0;
    for (int j = 1; j <= steps; ++j) {
      s = ou_exact_step(s, c, sqrt_h * rng());
      if (j == probes[probe]) {
        z[probe].push_back(s.z);
        v[probe].push_back(s.v);
        ++probe;
      }
    }
  }

  OuVarianceReport rep;
  const double e2 = m.epsilon * m.epsilon;
  const char* names[3] = {"0.5", "1", "2"};
  for (int i = 0; i < 3; ++i) {
    const double t = probes[i] * h;
    const double sz2 = e2 * std::expm1(2.0 * m.lambda_plus * t) / (2.0 * m.lambda_plus);
    const double sv2 = e2 * -std::expm1(2.0 * m.lambda_minus * t) / (2.0 * std::abs(m.lambda_minus));
    const double rel_se = std::sqrt(2.0 / (n_samples - 1));
    const MeanSd mz = ordered_mean_sd(z[i]);
    const MeanSd mv = ordered_mean_sd(v[i]);
    VarianceCheck cz{std::string("var zbar at t=") + names[i] + "/l+", mz.sd * mz.sd, sz2, 3.0 * rel_se * sz2, false};
    VarianceCheck cv{std::string("var vbar at t=") + names[i] + "/l+", mv.sd * mv.sd, sv2, 3.0 * rel_se * sv2, false};
    cz.pass = std::abs(cz.value - cz.target) <= cz.tolerance;
    cv.pass = std::abs(cv.value - cv.target) <= cv.tolerance;
    rep.checks.push_back(cv);
    rep.checks.push_back(cz);
  }
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const VarianceCheck& c) { return c.pass; });
  return rep;
}

std::vector<VarianceCheck> trial_spread_checks(const BatchSummary& s, double safety) {
  const ModelParams& m = s.params;
  std::vector<VarianceCheck> out;
  auto ratio_band = [](std::string name, double value) {
    VarianceCheck c{std::move(name), value, 1.0, 0.0, value >= 0.1 && value <= 10.0};
    c.tolerance = 10.0;
    return c;
  };
  auto bound = [&](std::string name, double value, double limit) {
    return VarianceCheck{std::move(name), value, limit, limit, std::abs(value) <= limit};
  };
  out.push_back(ratio_band("sd z(S_k) / sigma_eps", s.z_at_S.sd / m.sigma_eps));
  out.push_back(bound("|mean z(S_k)| / sigma_tilde", std::abs(s.z_at_S.mean) / m.sigma_tilde_eps, safety));
  out.push_back(ratio_band("sd of v(T_k+1) noise part / eps", s.v_noise_at_T.sd / m.epsilon));
  out.push_back(bound("mean v(T_k+1) / sigma_bar", s.v_at_T.mean / m.sigma_bar_eps, safety));
  return out;
}

double timescale_slope(const SaddleAlgebra& sys, double nu) {
  return (1.0 - nu * (2.0 + sys.theta) / (1.0 + sys.theta)) / sys.lambda_plus;
}

TimescaleReport timescale_scan(const std::vector<BatchSummary>& batches, double rel_tol, double min_r2) {
  if (batches.size() < 3) throw std::invalid_argument("timescale_scan: need at least three epsilon values");
  std::vector<const BatchSummary*> order;
  for (const auto& b : batches) order.push_back(&b);
  std::sort(order.begin(), order.end(),
            [](const BatchSummary* a, const BatchSummary* b) { return a->params.epsilon > b->params.epsilon; });
  const double decades = std::log10(order.front()->params.epsilon / order.back()->params.epsilon);
  if (decades < 2.0 - 1e-9) throw std::invalid_argument("timescale_scan: epsilons must span two decades");

  TimescaleReport r;
  std::vector<double> x;
  for (const BatchSummary* b : order) {
    r.epsilons.push_back(b->params.epsilon);
    r.mean_times.push_back(b->crossing_time.mean);
    r.sem.push_back(b->crossing_time.n > 1 ? b->crossing_time.sd / std::sqrt(double(b->crossing_time.n)) : 0.0);
    x.push_back(std::log(1.0 / b->params.epsilon));
  }
  r.fit = fit_line(x, r.mean_times);
  r.predicted_slope = timescale_slope(order.front()->params, order.front()->params.nu);
  r.relative_error = std::abs(r.fit.slope - r.predicted_slope) / r.predicted_slope;
  r.monotone = std::is_sorted(r.mean_times.begin(), r.mean_times.end());
  r.pass = r.fit.slope > 0.0 && r.relative_error <= rel_tol && r.fit.r2 >= min_r2;
  return r;
}

bool in_trapping_box(const ModelParams& m, int N, double x, double p, double xi) {
  const double L = m.lambda_plus - m.lambda_minus;
  const double s = m.sigma_bar_eps * std::pow(m.epsilon, -xi) / m.eta_eps;
  const double x_lim = kTwoPi * N - m.eta_eps / L * (1.0 - s);
  const double p_lim = -m.lambda_plus * m.eta_eps / L * (1.0 - std::abs(m.lambda_minus) * s / m.lambda_plus);
  return x <= x_lim && p <= p_lim;
}

TrappingReport trapping_check(const ModelParams& m, const std::vector<TrialRecord>& records, double xi) {
  TrappingReport r;
  r.slack = m.sigma_bar_eps * std::pow(m.epsilon, -xi) / m.eta_eps;
  for (const TrialRecord& t : records) {
    if (t.outcome != Outcome::Trapped) continue;
    ++r.n_trapped;
    if (in_trapping_box(m, t.N, t.x_final, t.p_final, xi)) ++r.inside;
  }
  r.fraction = r.n_trapped > 0 ? static_cast<double>(r.inside) / r.n_trapped : 0.0;
  return r;
}

MarcusSheppReport marcus_shepp_check(const ModelParams& m, const std::vector<double>& lambdas, long n_samples,
                                     std::uint64_t seed, double delta, int grid) {
  if (grid < 2) throw std::invalid_argument("marcus_shepp_check: grid needs two or more points");
  MarcusSheppReport rep;
  const double lm = std::abs(m.lambda_minus);
  rep.t_start = 1.0 / lm;
  rep.t_end = 2.0 / lm;
  rep.grid = grid;
  rep.n_samples = n_samples;

  const double h = (rep.t_end - rep.t_start) / (grid - 1);
  const OuStep to_start(m, rep.t_start);
  const OuStep step(m, h);
  std::vector<double> inv_sd(static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) {
    const double t = rep.t_start + j * h;
    inv_sd[j] = 1.0 / (m.epsilon * std::sqrt(-std::expm1(2.0 * m.lambda_minus * t) / (2.0 * lm)));
  }

  std::vector<long> exceed(lambdas.size(), 0);
  NormalStream rng(seed);
  for (long i = 0; i < n_samples; ++i) {
    double v = to_start.gain_v * std::sqrt(rep.t_start) * rng();
    double sup = std::abs(v) * inv_sd[0];
    for (int j = 1; j < grid; ++j) {
      v = step.decay_v * v + step.gain_v * std::sqrt(h) * rng();
      sup = std::max(sup, std::abs(v) * inv_sd[j]);
    }
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      if (sup >= lambdas[l]) ++exceed[l];
  }
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    TailRow r;
    r.lambda = lambdas[l];
    r.empirical = static_cast<double>(exceed[l]) / n_samples;
    r.bound = 2.0 * std::exp(-lambdas[l] * lambdas[l] * (1.0 - delta) / 2.0);
    r.pass = r.empirical <= r.bound;
    rep.rows.push_back(r);
  }
  rep.pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const TailRow& r) { return r.pass; });
  return rep;
}

ScalarDrift saddle_drift(const SaddleAlgebra& sys) {
  const double xa = sys.x_alpha, a = sys.alpha;
  return {[xa, a](double x) { return std::sin(x - xa) + a; }, sys.beta, 0.0};
}

ComparisonReport comparison_lemma_check(const ScalarDrift& drift, double x0, double xi, double t_end, double dt,
                                        long n_paths, std::uint64_t seed) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("comparison_lemma_check: need dt, t_end > 0");
  ComparisonReport rep;
  rep.n_paths = n_paths;
  const long steps = static_cast<long>(std::ceil(t_end / dt));
  const double sqrt_dt = std::sqrt(dt);
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };

  for (long i = 0; i < n_paths; ++i) {
    NormalStream rng(trial_seed(seed, static_cast<std::uint64_t>(i)));
    double x = x0, X = x0;
    int segment = 0;
    bool established = false;
    long lag = 0;
    for (long n = 0; n <= steps; ++n) {
      const double cx = drift.c(x);
      const int sd = sign(cx - (drift.a * x + drift.b));
      const double gap = x - X;
      // Differences at rounding level of x count as Delta = 0.
      const int sD = std::abs(gap) <= 1e-14 * std::max(1.0, std::abs(x)) ? 0 : sign(gap);
      if (sd != segment) {
        segment = sd;
        established = false;
        lag = 0;
      }
      if (sd != 0) {
        if (established) {
          ++rep.checked_steps;
          if (sD == -sd) ++rep.violations;
        } else if (sD == 0 || sD == sd) {
          established = true;
          ++rep.checked_steps;
        } else {
          ++rep.lag_steps;
          rep.max_lag = std::max(rep.max_lag, ++lag);
        }
      }
      if (n == steps) break;
      const double dW = sqrt_dt * rng();
      x += cx * dt + xi * dW;
      X += (drift.a * X + drift.b) * dt + xi * dW;
    }
  }
  rep.pass = rep.violations == 0 && rep.checked_steps > 0;
  return rep;
}

ScalingReport scaling_suite(const Regime& r, const std::vector<double>& etas, double rel_tol, double min_r2) {
  if (etas.size() < 3) throw std::invalid_argument("scaling_suite: need at least three eta values");
  const SaddleAlgebra& sys = r.sys;
  const double th = sys.theta;
  ExponentFit r1{"Sigma_r^(1)", {}, {}, {}, -1.0 / (1.0 + th), false, false};
  ExponentFit r2{"Sigma_r^(2)", {}, {}, {}, -2.0 / (1.0 + th), false, false};
  ExponentFit y2{"Sigma_y^(2)", {}, {}, {}, 2.0, true, false};
  ExponentFit rho{"rho ratio", {}, {}, {}, th * (2.0 + th) / (1.0 + th), false, false};

  for (double eta : etas) {
    const WindowSpan w = approach_window(r.table, sys, eta);
    const SigmaValues sv = sigma_functionals(r.table, sys, w.x_start, {w.x_end});
    const RhoProfile rp = rho_propagation(r.table, sys, 1e-3 * eta, w.x_start, w.x_end, 2);
    if (rp.trapped) throw std::runtime_error("scaling_suite: offset orbit trapped");
    for (ExponentFit* f : {&r1, &r2, &y2, &rho}) f->eta.push_back(eta);
    r1.values.push_back(sv.r1[0]);
    r2.values.push_back(sv.r2[0]);
    y2.values.push_back(sv.y2[0]);
    rho.values.push_back(std::abs(rp.rho.back() / rp.rho.front()));
  }

  ScalingReport rep;
  for (ExponentFit* f : {&r1, &r2, &y2, &rho}) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < f->eta.size(); ++i) {
      lx.push_back(std::log(f->eta[i]));
      ly.push_back(std::log(f->values[i]));
    }
    f->fit = fit_line(lx, ly);
    const bool close = f->upper_bound_only ? std::abs(f->fit.slope) <= f->predicted * (1.0 + rel_tol)
                                           : std::abs(f->fit.slope - f->predicted) <= rel_tol * std::abs(f->predicted);
    f->pass = close && f->fit.r2 >= min_r2;
    rep.fits.push_back(*f);
  }
  rep.pass = std::all_of(rep.fits.begin(), rep.fits.end(), [](const ExponentFit& f) { return f.pass; });
  return rep;
}

}  // namespace wash
