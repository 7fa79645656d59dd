#include "wash/commands.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

namespace wash {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename... T>
std::string row(const T&... fields) {
  std::ostringstream os;
  bool first = true;
  auto put = [&](const auto& f) {
    if (!first) os << ',';
    first = false;
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(f)>>)
      os << num(f);
    else
      os << f;
  };
  (put(fields), ...);
  return os.str();
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

json mean_sd_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; }

json checks_json(const std::vector<VarianceCheck>& checks) {
  json a = json::array();
  for (const auto& c : checks)
    a.push_back({{"name", c.name}, {"value", c.value}, {"target", c.target}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  return a;
}

json document(const RunConfig& c, const std::string& kind) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  j["config"] = config_json(c);
  return j;
}

fs::path prepare_dir(const RunConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

// Every campaign reruns these before trusting its statistics.
json sentinels(const Regime& r, const ModelParams& m, bool& pass) {
  NormalStream rng(0x5eed);
  double round_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = 20.0 * rng(), p = 3.0 * rng();
    const int k = static_cast<int>(std::lround(x / kTwoPi));
    const ZV zv = zv_transform(x, p, k, m);
    const auto [xb, pb] = zv_inverse(zv.z, zv.v, k, m);
    round_trip = std::max({round_trip, std::abs(xb - x), std::abs(pb - p)});
  }
  const WindowSpan w = approach_window(r.table, r.sys, m.eta_eps);
  double gap = NAN;
  bool sss = false;
  try {
    gap = std::max(sigma_r_profile(m, r.table, w).max_rel_gap, sigma_y_profile(m, r.table, w).max_rel_gap);
    sss = true;
  } catch (const ConsistencyError&) {
  }
  const bool zv_ok = round_trip < 1e-12;
  pass = pass && zv_ok && sss;
  return {{"zv_round_trip_max_error", round_trip}, {"zv_pass", zv_ok}, {"time_space_variance_gap", gap}, {"time_space_pass", sss}};
}

int cmd_critical_tilt(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const CriticalTilt ct = critical_tilt(c.gamma, c.tol_alpha);
  out << "alpha_gamma(" << num(c.gamma) << ") = " << num(ct.alpha) << "\n";
  std::vector<std::string> rows;
  for (double g : c.gamma_list) {
    const CriticalTilt t = critical_tilt(g, c.tol_alpha);
    rows.push_back(row(g, t.alpha));
  }
  const fs::path csv = write_csv(dir, "alpha_curve.csv", c, "gamma,alpha_gamma", rows);
  json j = document(c, "critical-tilt");
  j["gamma"] = c.gamma;
  j["alpha_gamma"] = ct.alpha;
  j["bracket"] = json::array({ct.lower, ct.upper});
  j["iterations"] = ct.iterations;
  j["alpha_over_gamma"] = ct.alpha / c.gamma;
  j["reference_small_gamma_limit"] = 4.0 / kPi;
  j["pass"] = true;
  write_json(dir, "summary.json", j);
  out << "wrote " << csv.string() << "\n";
  return 0;
}

int cmd_heteroclinic(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const Regime r = critical_regime(c.gamma, c.orbit_grid);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < r.table.grid.size(); ++i) rows.push_back(row(r.table.grid[i], r.table.p_values[i]));
  write_csv(dir, "orbit.csv", c, "x,p", rows);

  double max_res = 0.0;
  for (std::size_t i = 0; i + 1 < r.table.grid.size(); ++i)
    max_res = std::max(max_res, orbit_residual(r.table, r.sys, 0.5 * (r.table.grid[i] + r.table.grid[i + 1])));
  const double flux_ref = kTwoPi * r.tilt.alpha / c.gamma;
  const double flux_rel = std::abs(r.table.flux_integral - flux_ref) / flux_ref;
  const bool pass = max_res < 1e-8 && flux_rel < 1e-6 && std::abs(r.table.left_slope - r.sys.lambda_plus) < 1e-3 &&
                    std::abs(r.table.right_slope - r.sys.lambda_minus) < 1e-3;

  json j = document(c, "heteroclinic");
  j["k"] = r.table.k;
  j["gamma"] = c.gamma;
  j["alpha_used"] = r.table.alpha_used;
  j["left_slope"] = r.table.left_slope;
  j["right_slope"] = r.table.right_slope;
  j["lambda_plus"] = r.sys.lambda_plus;
  j["lambda_minus"] = r.sys.lambda_minus;
  j["flux_integral"] = r.table.flux_integral;
  j["flux_reference"] = flux_ref;
  j["flux_relative_error"] = flux_rel;
  j["max_orbit_residual"] = max_res;
  j["n_grid"] = r.table.grid.size();
  j["pass"] = pass;
  write_json(dir, "orbit.json", j);
  out << "alpha_gamma = " << num(r.tilt.alpha) << ", flux relative error " << num(flux_rel)
      << ", max orbit residual " << num(max_res) << "\n";
  return pass ? 0 : 1;
}

int cmd_phase_portrait(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const CriticalTilt ct = critical_tilt(c.gamma, c.tol_alpha);
  struct Case {
    std::string name;
    double gamma, alpha;
  };
  const std::vector<Case> cases = {{"periodic", 0.0, 0.0},
                                   {"running", c.gamma, 1.2},
                                   {"confined", c.gamma, 0.5 * ct.alpha},
                                   {"coexisting", c.gamma, 0.5 * (ct.alpha + 1.0)},
                                   {"critical", c.gamma, ct.alpha}};

  std::vector<std::string> field, orbits;
  for (const Case& k : cases) {
    // For tilts above 1 there are no saddles; the force keeps the same phase shift as alpha -> 1.
    const double shift = std::asin(std::min(k.alpha, 1.0));
    auto force = [&](double x) { return std::sin(x - shift) + k.alpha; };
    const int n = c.portrait_grid;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -3.0 * kPi + 6.0 * kPi * i / (n - 1);
        const double p = -3.0 + 6.0 * j / (n - 1);
        field.push_back(row(k.name, k.gamma, k.alpha, x, p, p, -k.gamma * p + force(x)));
      }
    auto rhs = [&](double, const Vec<2>& y) {
      Vec<2> d;
      d << y[1], -k.gamma * y[1] + force(y[0]);
      return d;
    };
    const double starts[][2] = {{-kPi, 0.5}, {-kPi, 1.5}, {-kPi, 2.5}, {-kPi, -2.0}, {0.5, 0.0}, {-2.5, -0.5}};
    int id = 0;
    for (const auto& s : starts) {
      Vec<2> y0;
      y0 << s[0], s[1];
      OdeOptions opt;
      opt.rtol = 1e-9;
      opt.atol = 1e-12;
      opt.h_max = 0.05;
      orbits.push_back(row(k.name, id, 0.0, y0[0], y0[1]));
      integrate_dopri5<2>(rhs, 0.0, y0, 40.0, opt, [&](const DenseStep<2>& st) {
        orbits.push_back(row(k.name, id, st.t1, st.y1[0], st.y1[1]));
        return std::abs(st.y1[0]) < 4.0 * kPi;
      });
      ++id;
    }
  }
  // Heteroclinic connections of the critical case, one per well.
  const Regime r = critical_regime(c.gamma, 513);
  for (int w = -1; w <= 1; ++w)
    for (std::size_t i = 0; i < r.table.grid.size(); ++i)
      orbits.push_back(row(std::string("critical"), 100 + w, NAN, r.table.grid[i] + kTwoPi * w,
                           r.table.p_values[i]));

  write_csv(dir, "vector_field.csv", c, "regime,gamma,alpha,x,p,dx,dp", field);
  write_csv(dir, "orbits.csv", c, "regime,orbit,t,x,p", orbits);
  json j = document(c, "phase-portrait");
  j["alpha_gamma"] = ct.alpha;
  json regimes = json::array();
  for (const Case& k : cases) regimes.push_back({{"regime", k.name}, {"gamma", k.gamma}, {"alpha", k.alpha}});
  j["regimes"] = regimes;
  j["heteroclinic_orbit_ids"] = json::array({99, 100, 101});
  j["pass"] = true;
  write_json(dir, "summary.json", j);
  out << "wrote vector_field.csv and orbits.csv for " << cases.size() << " regimes\n";
  return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const Regime r = critical_regime(c.gamma, c.orbit_grid);
  const ModelParams m = make_params(c.gamma, r.tilt.alpha, c.epsilon, c.nu);
  const SimSettings sim = c.sim_settings(m);
  const std::uint64_t seed = trial_seed(c.master_seed, 0);

  std::vector<std::string> trace;
  long step = 0;
  auto emit = [&](const SdeState& s) {
    const ZV zv = zv_transform(s.x, s.p, s.k, m);
    trace.push_back(row(s.t, s.x, s.p, zv.z, zv.v, s.k, to_string(s.phase)));
  };
  const TraceFn fn = [&](const SdeState& s) {
    if (step++ % c.trace_stride == 0) emit(s);
  };
  const TrialRecord rec = simulate_trial(m, default_initial_condition(r), seed, sim, &fn);

  write_csv(dir, "trace.csv", c, "t,x,p,z,v,k,phase", trace);
  write_csv(dir, "events.csv", c, "trial,k,S_k,T_k1,z_at_S,v_at_T,crossed", event_rows({rec}));
  json j = document(c, "simulate");
  j["params"] = params_json(m);
  j["dt"] = sim.dt;
  j["seed"] = seed;
  j["N"] = rec.N;
  j["outcome"] = to_string(rec.outcome);
  j["T_final"] = rec.T_final;
  j["x_final"] = rec.x_final;
  j["p_final"] = rec.p_final;
  j["steps"] = rec.steps;
  j["n_events"] = rec.events.size();
  j["pass"] = rec.outcome == Outcome::Trapped;
  write_json(dir, "summary.json", j);
  out << "outcome " << to_string(rec.outcome) << ", N = " << rec.N << ", T = " << num(rec.T_final) << "\n";
  return rec.outcome == Outcome::Trapped ? 0 : 1;
}

BatchOptions batch_options(const RunConfig& c, const ModelParams& m, long n_trials) {
  BatchOptions o;
  o.n_trials = n_trials;
  o.master_seed = c.master_seed;
  o.sim = c.sim_settings(m);
  o.threads = c.threads;
  return o;
}

int cmd_crossing_stats(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const Regime r = critical_regime(c.gamma, c.orbit_grid);
  const ModelParams m = make_params(c.gamma, r.tilt.alpha, c.epsilon, c.nu);
  std::vector<TrialRecord> records;
  const BatchSummary s = run_batch(m, default_initial_condition(r), batch_options(c, m, c.n_trials), &records);
  const GofReport g = geometric_gof(s);
  bool pass = g.pass && !s.unreliable;

  json j = document(c, "crossing-stats");
  j["sentinels"] = sentinels(r, m, pass);
  j["batch"] = batch_json(s);
  j["geometric_gof"] = gof_json(g);
  j["pass"] = pass;
  write_json(dir, "summary.json", j);
  write_csv(dir, "batch.csv", c, "seed,N,T_final,x_final,p_final,n_events,outcome", batch_rows(records));
  write_csv(dir, "events.csv", c, "trial,k,S_k,T_k1,z_at_S,v_at_T,crossed", event_rows(records));

  for (const GofRow& row : g.rows)
    out << "P{N" << (row.label.rfind(">=", 0) == 0 ? "" : "=") << row.label << "} = " << num(row.p_hat) << " (reference " << num(row.reference) << ", band "
        << num(row.band) << ") " << (row.pass ? "ok" : "FAIL") << "\n";
  out << "trapped mass " << num(g.total_mass) << (pass ? "; all checks pass\n" : "; some checks FAIL\n");
  return pass ? 0 : 1;
}

int cmd_validate(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const Regime r = critical_regime(c.gamma, c.orbit_grid);
  const ModelParams m = make_params(c.gamma, r.tilt.alpha, c.epsilon, c.nu);
  bool pass = true;
  json j = document(c, "validate");
  j["params"] = params_json(m);
  j["sentinels"] = sentinels(r, m, pass);

  // OU variances.
  const OuVarianceReport ou = ou_variance_check(m, c.ou_samples, c.master_seed);
  j["ou_variance"] = checks_json(ou.checks);
  pass = pass && ou.pass;

  // Variance along the approach window, both routes.
  const WindowSpan w = approach_window(r.table, r.sys, m.eta_eps);
  const VarianceProfile vr = sigma_r_profile(m, r.table, w);
  const VarianceProfile vy = sigma_y_profile(m, r.table, w);
  std::vector<std::string> prof;
  for (std::size_t i = 0; i < vr.x.size(); ++i)
    prof.push_back(row(vr.x[i], vr.t[i], vr.by_time[i], vr.by_space[i], vy.by_time[i], vy.by_space[i]));
  write_csv(dir, "sigma_profile.csv", c, "x,t,sigma_r2_time,sigma_r2_space,sigma_y2_time,sigma_y2_space", prof);

  // Batches over the epsilon scan, plus the main epsilon at full size.
  std::vector<BatchSummary> scan;
  json scan_json = json::array();
  std::vector<std::string> ts_rows, trap_rows;
  std::vector<double> trap_fraction;
  const InitialCondition ic = default_initial_condition(r);
  for (double eps : c.epsilon_list) {
    const ModelParams me = make_params(c.gamma, r.tilt.alpha, eps, c.nu);
    const long n = eps == c.epsilon ? c.n_trials : c.scan_trials;
    std::vector<TrialRecord> records;
    scan.push_back(run_batch(me, ic, batch_options(c, me, n), &records));
    const BatchSummary& s = scan.back();
    const TrappingReport tr = trapping_check(me, records);
    trap_fraction.push_back(tr.fraction);

    const WindowSpan we = approach_window(r.table, r.sys, me.eta_eps);
    double sr = 0.0, sy = 0.0;
    for (double v : sigma_r_profile(me, r.table, we).by_time) sr = std::max(sr, v);
    for (double v : sigma_y_profile(me, r.table, we).by_time) sy = std::max(sy, v);
    const double sr_ratio = std::sqrt(sr) / me.sigma_eps;
    const double sy_ratio = std::sqrt(sy) / (eps / me.eta_eps);

    json e;
    e["epsilon"] = eps;
    e["n_trials"] = s.n_trials;
    e["p_hat_0"] = s.p_hat[0];
    e["crossing_time"] = mean_sd_json(s.crossing_time);
    e["immediate_exits"] = s.immediate_exits;
    e["n_events"] = s.n_events;
    e["spread_checks"] = checks_json(trial_spread_checks(s));
    e["trapping_box_fraction"] = tr.fraction;
    e["trapping_box_slack"] = tr.slack;
    e["sup_sigma_r_over_sigma_eps"] = sr_ratio;
    e["sup_sigma_y_over_eps_over_eta"] = sy_ratio;
    e["coupling_gap_q95_over_eta2"] = s.coupling_gap_q95 / (me.eta_eps * me.eta_eps);
    scan_json.push_back(e);
    ts_rows.push_back(row(eps, s.crossing_time.mean, s.crossing_time.sd / std::sqrt(double(s.crossing_time.n)),
                          s.crossing_time.n));
    trap_rows.push_back(row(eps, tr.fraction, tr.n_trapped, tr.slack));
    out << "eps " << num(eps) << ": P{N=0} = " << num(s.p_hat[0]) << ", mean T-S = " << num(s.crossing_time.mean)
        << ", box fraction " << num(tr.fraction) << "\n";

    if (eps == c.epsilon) {
      const auto spread = trial_spread_checks(s);
      for (const auto& chk : spread) pass = pass && chk.pass;
      pass = pass && tr.fraction >= 0.95;
    }
    pass = pass && sr_ratio >= 0.1 && sr_ratio <= 10.0 && sy_ratio <= 10.0;
  }
  j["scan"] = scan_json;
  write_csv(dir, "timescale.csv", c, "epsilon,mean_time,sem,n_events", ts_rows);
  write_csv(dir, "trapping.csv", c, "epsilon,fraction,n_trapped,slack", trap_rows);

  bool trap_monotone = true;
  for (std::size_t i = 1; i < trap_fraction.size(); ++i)
    if (c.epsilon_list[i] < c.epsilon_list[i - 1] && trap_fraction[i] < trap_fraction[i - 1]) trap_monotone = false;
  j["trapping_monotone"] = trap_monotone;
  pass = pass && trap_monotone;

  if (c.epsilon_list.size() >= 3) {
    const TimescaleReport ts = timescale_scan(scan);
    j["timescale"] = {{"slope", ts.fit.slope},         {"intercept", ts.fit.intercept},
                      {"r2", ts.fit.r2},               {"predicted_slope", ts.predicted_slope},
                      {"relative_error", ts.relative_error}, {"monotone", ts.monotone},
                      {"pass", ts.pass}};
    out << "time scale slope " << num(ts.fit.slope) << " vs predicted " << num(ts.predicted_slope) << " (R^2 "
        << num(ts.fit.r2) << ") " << (ts.pass ? "ok" : "FAIL") << "\n";
    pass = pass && ts.pass;
  }

  const ScalingReport sc = scaling_suite(r, c.eta_list);
  json fits = json::array();
  std::vector<std::string> sc_rows;
  for (const ExponentFit& f : sc.fits) {
    fits.push_back({{"quantity", f.name},
                    {"slope", f.fit.slope},
                    {"r2", f.fit.r2},
                    {"predicted", f.predicted},
                    {"upper_bound_only", f.upper_bound_only},
                    {"pass", f.pass}});
    for (std::size_t i = 0; i < f.eta.size(); ++i) sc_rows.push_back(row(f.name, f.eta[i], f.values[i]));
    out << f.name << " exponent " << num(f.fit.slope) << " vs " << num(f.predicted) << " " << (f.pass ? "ok" : "FAIL")
        << "\n";
  }
  j["scaling"] = fits;
  write_csv(dir, "scaling.csv", c, "quantity,eta,value", sc_rows);
  pass = pass && sc.pass;

  std::vector<std::string> var_rows;
  for (const auto& chk : ou.checks) var_rows.push_back(row(chk.name, chk.value, chk.target, chk.tolerance, chk.pass));
  write_csv(dir, "variance.csv", c, "check,value,target,tolerance,pass", var_rows);

  j["pass"] = pass;
  write_json(dir, "summary.json", j);
  out << (pass ? "all checks pass\n" : "some checks FAIL\n");
  return pass ? 0 : 1;
}

int cmd_appendix(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_dir(c);
  const Regime r = critical_regime(c.gamma, c.orbit_grid);
  const ModelParams m = make_params(c.gamma, r.tilt.alpha, c.epsilon, c.nu);
  const MarcusSheppReport ms = marcus_shepp_check(m, c.ms_lambdas, c.ms_samples, c.master_seed);
  const ComparisonReport cl =
      comparison_lemma_check(saddle_drift(r.sys), 0.0, 0.05, 3.0, 1e-3, c.comparison_paths, c.master_seed);

  json j = document(c, "appendix-checks");
  json rows = json::array();
  std::vector<std::string> csv;
  for (const TailRow& t : ms.rows) {
    rows.push_back({{"lambda", t.lambda}, {"empirical", t.empirical}, {"bound", t.bound}, {"pass", t.pass}});
    csv.push_back(row(t.lambda, t.empirical, t.bound, t.pass));
    out << "Marcus-Shepp lambda " << num(t.lambda) << ": " << num(t.empirical) << " <= " << num(t.bound) << " "
        << (t.pass ? "ok" : "FAIL") << "\n";
  }
  j["marcus_shepp"] = {{"window", json::array({ms.t_start, ms.t_end})},
                       {"grid", ms.grid},
                       {"n_samples", ms.n_samples},
                       {"rows", rows},
                       {"pass", ms.pass}};
  j["comparison_lemma"] = {{"n_paths", cl.n_paths},     {"checked_steps", cl.checked_steps},
                           {"violations", cl.violations}, {"lag_steps", cl.lag_steps},
                           {"max_lag", cl.max_lag},       {"pass", cl.pass}};
  out << "comparison lemma: " << cl.violations << " violations over " << cl.checked_steps << " steps "
      << (cl.pass ? "ok" : "FAIL") << "\n";
  const bool pass = ms.pass && cl.pass;
  j["pass"] = pass;
  write_csv(dir, "marcus_shepp.csv", c, "lambda,empirical,bound,pass", csv);
  write_json(dir, "summary.json", j);
  return pass ? 0 : 1;
}

}  // namespace

std::string artifact_header(const RunConfig& c, const std::string& kind) {
  std::string h = "# wash csv schema " + std::to_string(kSchemaVersion) + ": " + kind + "\n";
  std::istringstream in(to_config_text(c));
  std::string line;
  while (std::getline(in, line)) h += "# " + line + "\n";
  return h;
}

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["gamma"] = c.gamma;
  j["epsilon"] = c.epsilon;
  j["nu"] = c.nu;
  j["dt"] = c.dt ? json(*c.dt) : json(nullptr);
  j["t_max"] = c.t_max;
  j["scheme"] = to_string(c.scheme);
  j["n_trials"] = c.n_trials;
  j["k_max"] = c.k_max;
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["tol_alpha"] = c.tol_alpha;
  j["gamma_list"] = c.gamma_list;
  j["orbit_grid"] = c.orbit_grid;
  j["eta_list"] = c.eta_list;
  j["trace_stride"] = c.trace_stride;
  j["epsilon_list"] = c.epsilon_list;
  j["scan_trials"] = c.scan_trials;
  j["ou_samples"] = c.ou_samples;
  j["ms_samples"] = c.ms_samples;
  j["ms_lambdas"] = c.ms_lambdas;
  j["comparison_paths"] = c.comparison_paths;
  j["portrait_grid"] = c.portrait_grid;
  return j;
}

json params_json(const ModelParams& m) {
  return {{"gamma", m.gamma},
          {"alpha", m.alpha},
          {"epsilon", m.epsilon},
          {"nu", m.nu},
          {"x_alpha", m.x_alpha},
          {"beta", m.beta},
          {"lambda_plus", m.lambda_plus},
          {"lambda_minus", m.lambda_minus},
          {"theta", m.theta},
          {"eta_eps", m.eta_eps},
          {"sigma_eps", m.sigma_eps},
          {"sigma_bar_eps", m.sigma_bar_eps},
          {"sigma_tilde_eps", m.sigma_tilde_eps}};
}

json batch_json(const BatchSummary& s) {
  json ci = json::array();
  for (const auto& i : s.ci) ci.push_back(interval_json(i));
  return {{"params", params_json(s.params)},
          {"dt", s.dt},
          {"k_max", s.k_max},
          {"master_seed", s.master_seed},
          {"n_trials", s.n_trials},
          {"counts", s.counts},
          {"p_hat", s.p_hat},
          {"wilson_95", ci},
          {"outcomes", {{"trapped", s.trapped}, {"cap_hit", s.cap_hit}, {"k_max", s.k_max_hits}}},
          {"crossing_time", mean_sd_json(s.crossing_time)},
          {"z_at_S", mean_sd_json(s.z_at_S)},
          {"v_at_T", mean_sd_json(s.v_at_T)},
          {"v_noise_at_T", mean_sd_json(s.v_noise_at_T)},
          {"immediate_exits", s.immediate_exits},
          {"n_events", s.n_events},
          {"coupling_gap_q95", s.coupling_gap_q95},
          {"unreliable", s.unreliable}};
}

json gof_json(const GofReport& g) {
  json rows = json::array();
  for (const GofRow& r : g.rows)
    rows.push_back({{"k", r.label}, {"p_hat", r.p_hat}, {"reference", r.reference}, {"band", r.band}, {"pass", r.pass}});
  return {{"rows", rows}, {"total_mass", g.total_mass}, {"mass_pass", g.mass_pass}, {"pass", g.pass}};
}

fs::path write_csv(const fs::path& dir, const std::string& name, const RunConfig& c, const std::string& columns,
                   const std::vector<std::string>& rows) {
  const fs::path path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << artifact_header(c, name.substr(0, name.rfind('.'))) << columns << "\n";
  for (const auto& r : rows) f << r << "\n";
  return path;
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
  return path;
}

std::vector<std::string> batch_rows(const std::vector<TrialRecord>& records) {
  std::vector<std::string> rows;
  for (const TrialRecord& r : records)
    rows.push_back(row(r.seed, r.N, r.T_final, r.x_final, r.p_final, r.events.size(), to_string(r.outcome)));
  return rows;
}

std::vector<std::string> event_rows(const std::vector<TrialRecord>& records) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < records.size(); ++i)
    for (const CrossingEvent& e : records[i].events)
      rows.push_back(row(i, e.k, e.S_k, e.T_k1, e.z_at_S, e.v_at_T, e.crossed ? 1 : 0));
  return rows;
}

int run_command(const RunConfig& c, std::ostream& out) {
  if (c.command == "critical-tilt") return cmd_critical_tilt(c, out);
  if (c.command == "heteroclinic") return cmd_heteroclinic(c, out);
  if (c.command == "phase-portrait") return cmd_phase_portrait(c, out);
  if (c.command == "simulate") return cmd_simulate(c, out);
  if (c.command == "crossing-stats") return cmd_crossing_stats(c, out);
  if (c.command == "validate") return cmd_validate(c, out);
  if (c.command == "appendix-checks") return cmd_appendix(c, out);
  throw ConfigError("unknown command '" + c.command + "'");
}

}  // namespace wash
