#include "wash/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wash {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Approaching: return "approaching";
    case Phase::Critical: return "critical";
    case Phase::Terminal: return "terminal";
  }
  return "?";
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Trapped: return "trapped";
    case Outcome::CapHit: return "cap_hit";
    case Outcome::KMax: return "k_max";
  }
  return "?";
}

std::string to_string(Scheme s) { return s == Scheme::EulerMaruyama ? "euler-maruyama" : "splitting"; }

namespace {

// sqrt((exp(2 l dt) - 1) / (2 l dt)), stable for small l dt.
double ou_gain(double lambda, double dt) {
  const double a = 2.0 * lambda * dt;
  return std::abs(a) < 1e-300 ? 1.0 : std::sqrt(std::expm1(a) / a);
}

struct Point {
  double t, x, p;
};

}  // namespace

OuStep::OuStep(const ModelParams& m, double step) : dt(step) {
  decay_z = std::exp(m.lambda_plus * step);
  decay_v = std::exp(m.lambda_minus * step);
  gain_z = m.epsilon * ou_gain(m.lambda_plus, step);
  gain_v = m.epsilon * ou_gain(m.lambda_minus, step);
}

SplittingStep::SplittingStep(const ModelParams& m, double step) : h(step) {
  damp = std::exp(-m.gamma * step);
  noise = m.epsilon * ou_gain(-m.gamma, step);
}

ZV ou_exact_step(ZV zv, const ModelParams& m, double dt, double dW) {
  return ou_exact_step(zv, OuStep(m, dt), dW);
}

double default_dt(const ModelParams& m) { return std::min(1e-3, m.eta_eps * m.eta_eps / 4.0); }

double default_t_max(const ModelParams& m) { return 200.0 * std::log(1.0 / m.epsilon) / m.lambda_plus; }

StopPoint advance_to_stop(SdeState& s, const StopPoint& anchor, const ModelParams& m, const SimSettings& cfg,
                          NormalStream& rng, const TraceFn* trace, CrossingEvent* coupling) {
  if (s.phase == Phase::Terminal) throw SimulationError("advance_to_stop: path already terminated");
  if (!(cfg.dt > 0.0)) throw SimulationError("advance_to_stop: dt must be positive");
  const double eta = m.eta_eps;
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double t_max = cfg.t_max > 0.0 ? cfg.t_max : default_t_max(m);
  const bool approaching = s.phase == Phase::Approaching;
  const double saddle = kTwoPi * s.k;
  const double lam = approaching ? m.lambda_plus : m.lambda_minus;
  rng.seek(s.rng_cursor);

  // Monitored coordinate: v while approaching, z while critical.
  auto coord = [&](double x, double p) { return p - lam * (x - saddle); };
  auto hit = [&](double c) { return approaching ? c <= eta : std::abs(c) >= eta; };

  auto finish = [&](const Point& a, const Point& b) {
    const double ca = coord(a.x, a.p), cb = coord(b.x, b.p);
    double f = 1.0;
    if (hit(ca)) {
      f = 0.0;
    } else if (cb != ca) {
      const double level = approaching ? eta : (cb >= eta ? eta : -eta);
      f = std::clamp((level - ca) / (cb - ca), 0.0, 1.0);
    }
    StopPoint sp;
    sp.t = a.t + f * (b.t - a.t);
    sp.x = a.x + f * (b.x - a.x);
    sp.p = a.p + f * (b.p - a.p);
    sp.zv = zv_transform(sp.x, sp.p, s.k, m);
    if (approaching) {
      sp.kind = StopKind::Entered;
      s.phase = Phase::Critical;
    } else if (sp.zv.z > 0.0) {
      sp.kind = StopKind::Crossed;
      s.phase = Phase::Approaching;
      ++s.k;
    } else {
      sp.kind = StopKind::Trapped;
      s.phase = Phase::Terminal;
    }
    s.rng_cursor = rng.cursor();
    return sp;
  };

  Point prev{anchor.t, anchor.x, anchor.p};
  if (hit(coord(prev.x, prev.p))) return finish(prev, prev);
  if (s.t > prev.t) {
    const Point cur{s.t, s.x, s.p};
    if (hit(coord(cur.x, cur.p))) return finish(prev, cur);
    prev = cur;
  }

  // Exact OU companion of z for the coupling diagnostic.
  const bool couple = coupling != nullptr && !approaching;
  OuStep ou;
  double zbar = 0.0, weight = 1.0, weight_step = 1.0;
  const bool split = cfg.substeps == 2;
  if (cfg.substeps != 1 && !split) throw SimulationError("advance_to_stop: substeps must be 1 or 2");
  const double h = split ? 0.5 * dt : dt;
  if (couple) {
    ou = OuStep(m, h);
    zbar = zv_transform(s.x, s.p, s.k, m).z;
    weight = std::exp(-m.lambda_plus * (s.t - anchor.t));
    weight_step = std::exp(-m.lambda_plus * h);
    coupling->coupling_gap = 0.0;
  }
  NormalStream aux(~rng.seed(), rng.cursor());

  // One step of size h; true when the stopping condition is met.
  const bool em = cfg.scheme == Scheme::EulerMaruyama;
  const SplittingStep split_coef(m, h);
  auto step = [&](double dW) {
    if (em)
      em_step(s, m, h, dW);
    else
      splitting_step(s, m, split_coef, dW);
    if (!std::isfinite(s.x) || !std::isfinite(s.p)) {
      std::ostringstream os;
      os << "non-finite state at t = " << s.t << " (k = " << s.k << ", draw " << rng.cursor() << ")";
      throw SimulationError(os.str());
    }
    if (trace) {
      s.rng_cursor = rng.cursor();
      (*trace)(s);
    }
    const double c = coord(s.x, s.p);
    if (couple) {
      zbar = ou.decay_z * zbar + ou.gain_z * dW;
      weight *= weight_step;
      coupling->coupling_gap = std::max(coupling->coupling_gap, std::abs(c - zbar) * weight);
    }
    return hit(c);
  };

  while (true) {
    if (s.t >= t_max) {
      s.rng_cursor = rng.cursor();
      StopPoint sp;
      sp.kind = StopKind::CapHit;
      sp.t = s.t;
      sp.x = s.x;
      sp.p = s.p;
      sp.zv = zv_transform(s.x, s.p, s.k, m);
      return sp;
    }
    const double dW = sqrt_dt * rng();
    if (split) {
      const double half = 0.5 * sqrt_dt * aux();
      if (step(0.5 * dW + half)) return finish(prev, Point{s.t, s.x, s.p});
      prev = {s.t, s.x, s.p};
      if (step(0.5 * dW - half)) return finish(prev, Point{s.t, s.x, s.p});
    } else if (step(dW)) {
      return finish(prev, Point{s.t, s.x, s.p});
    }
    prev = {s.t, s.x, s.p};
  }
}

TrialRecord simulate_trial(const ModelParams& m, const InitialCondition& init, std::uint64_t seed,
                           const SimSettings& cfg, const TraceFn* trace) {
  if (cfg.k_max < 1) throw SimulationError("simulate_trial: k_max must be at least 1");
  NormalStream rng(seed);
  SdeState s;
  s.x = init.x;
  s.p = init.p;
  s.k = init.k;
  if (trace) (*trace)(s);

  TrialRecord rec;
  rec.seed = seed;
  StopPoint anchor;
  anchor.t = s.t;
  anchor.x = s.x;
  anchor.p = s.p;

  auto close = [&](Outcome o, double t, double x, double p) {
    rec.outcome = o;
    rec.T_final = t;
    rec.x_final = x;
    rec.p_final = p;
    rec.steps = s.rng_cursor;
    rec.N = static_cast<int>(std::count_if(rec.events.begin(), rec.events.end(),
                                           [](const CrossingEvent& e) { return e.crossed; }));
    return rec;
  };

  while (true) {
    CrossingEvent ev;
    ev.k = s.k;
    const StopPoint entry = advance_to_stop(s, anchor, m, cfg, rng, trace);
    if (entry.kind == StopKind::CapHit) return close(Outcome::CapHit, s.t, s.x, s.p);
    ev.S_k = entry.t;
    ev.z_at_S = entry.zv.z;

    const StopPoint exit = advance_to_stop(s, entry, m, cfg, rng, trace, &ev);
    if (exit.kind == StopKind::CapHit) return close(Outcome::CapHit, s.t, s.x, s.p);
    ev.T_k1 = exit.t;
    ev.v_at_T = exit.zv.v;
    ev.crossed = exit.kind == StopKind::Crossed;
    rec.events.push_back(ev);

    if (!ev.crossed) return close(Outcome::Trapped, exit.t, exit.x, exit.p);
    if (static_cast<int>(rec.events.size()) >= cfg.k_max) return close(Outcome::KMax, exit.t, exit.x, exit.p);
    anchor = exit;
  }
}

}  // namespace wash
