#pragma once

#include "wash/params.hpp"
#include "wash/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace wash {

enum class Phase { Approaching, Critical, Terminal };
std::string to_string(Phase p);

/// State of one noisy path. rng_cursor indexes the next normal draw of the
/// trial's stream, so (seed, rng_cursor) pins down every later increment.
struct SdeState {
  double t = 0.0;
  double x = 0.0;
  double p = 0.0;
  int k = 0;
  Phase phase = Phase::Approaching;
  std::uint64_t rng_cursor = 0;
};

struct ZV {
  double z = 0.0;
  double v = 0.0;
};

/// z = p - l-(x - 2k pi), v = p - l+(x - 2k pi).
inline ZV zv_transform(double x, double p, int k, const SaddleAlgebra& s) {
  const double d = x - kTwoPi * k;
  return {p - s.lambda_minus * d, p - s.lambda_plus * d};
}

/// Inverse of zv_transform: returns (x, p).
inline std::pair<double, double> zv_inverse(double z, double v, int k, const SaddleAlgebra& s) {
  const double d = (z - v) / (s.lambda_plus - s.lambda_minus);
  return {kTwoPi * k + d, (s.lambda_plus * z - s.lambda_minus * v) / (s.lambda_plus - s.lambda_minus)};
}

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One Euler-Maruyama step. The position is advanced first and the force is
/// evaluated at the new position (semi-implicit Euler for the drift).
/// dW is the Brownian increment over dt.
inline void em_step(SdeState& s, const ModelParams& m, double dt, double dW) {
  s.x += s.p * dt;
  const double force = std::sin(s.x - m.x_alpha) + m.alpha;  // -V'(x)
  s.p += (force - m.gamma * s.p) * dt + m.epsilon * dW;
  s.t += dt;
}

/// Coefficients of the symmetric splitting step for step size h.
struct SplittingStep {
  double h = 0.0;
  double damp = 1.0;   // exp(-gamma h)
  double noise = 0.0;  // eps sqrt((1 - exp(-2 gamma h)) / (2 gamma h))

  SplittingStep() = default;
  SplittingStep(const ModelParams& m, double h);
};

/// Symmetric splitting step: drift half step in x, half kick, exact
/// friction-plus-noise update of p driven by dW, half kick, drift half step.
/// Second order in h for the deterministic part, one force evaluation.
inline void splitting_step(SdeState& s, const ModelParams& m, const SplittingStep& c, double dW) {
  s.x += 0.5 * c.h * s.p;
  const double kick = 0.5 * c.h * (std::sin(s.x - m.x_alpha) + m.alpha);
  s.p = c.damp * (s.p + kick) + c.noise * dW + kick;
  s.x += 0.5 * c.h * s.p;
  s.t += c.h;
}

enum class Scheme { EulerMaruyama, Splitting };
std::string to_string(Scheme s);

/// Precomputed exact one-step coefficients of the linear pair
/// dz = l+ z dt + eps dW, dv = l- v dt + eps dW.
struct OuStep {
  double dt = 0.0;
  double decay_z = 1.0, decay_v = 1.0;  // exp(l dt)
  double gain_z = 0.0, gain_v = 0.0;    // eps sqrt((exp(2 l dt) - 1)/(2 l dt))

  OuStep() = default;
  OuStep(const ModelParams& m, double dt);
};

/// Exact Gaussian update of (z, v); both components are driven by the same dW.
inline ZV ou_exact_step(ZV zv, const OuStep& c, double dW) {
  return {c.decay_z * zv.z + c.gain_z * dW, c.decay_v * zv.v + c.gain_v * dW};
}
ZV ou_exact_step(ZV zv, const ModelParams& m, double dt, double dW);

struct CrossingEvent {
  int k = 0;
  double S_k = 0.0;
  double T_k1 = 0.0;
  double z_at_S = 0.0;
  double v_at_T = 0.0;
  bool crossed = false;
  // sup over [S_k, T_k1] of |z - zbar| exp(-l+ (t - S_k)), zbar the exact OU
  // companion started from z at the first step after S_k.
  double coupling_gap = 0.0;
};

enum class Outcome { Trapped, CapHit, KMax };
std::string to_string(Outcome o);

struct TrialRecord {
  std::uint64_t seed = 0;
  int N = 0;  // saddles crossed; meaningful for Trapped
  Outcome outcome = Outcome::Trapped;
  double T_final = 0.0;
  double x_final = 0.0;
  double p_final = 0.0;
  std::uint64_t steps = 0;
  std::vector<CrossingEvent> events;
};

struct SimSettings {
  double dt = 1e-3;
  double t_max = 0.0;  // 0 selects default_t_max
  int k_max = 12;
  // 2 splits every increment into two half steps by Brownian-bridge
  // refinement from an auxiliary stream; the coarse path's increments are
  // preserved, so runs at dt and dt/2 are pathwise coupled.
  int substeps = 1;
  Scheme scheme = Scheme::Splitting;
};

/// dt = min(1e-3, eta^2/4).
double default_dt(const ModelParams& m);
/// 200 ln(1/eps) / l+.
double default_t_max(const ModelParams& m);

/// Optional per-step observer (after every step, and at the initial state).
using TraceFn = std::function<void(const SdeState&)>;

enum class StopKind { Entered, Crossed, Trapped, CapHit };

/// Interpolated location of a stopping time.
struct StopPoint {
  StopKind kind = StopKind::CapHit;
  double t = 0.0, x = 0.0, p = 0.0;
  ZV zv;
};

/// Runs the path until the next stopping time: S_k (v_k <= eta) while
/// approaching, T_{k+1} (|z_k| >= eta) while critical. `anchor` is the
/// interpolated point of the previous stopping time (or the initial state):
/// the condition is checked there first, then on the segment from the anchor
/// to the current state, then after each step. On a crossing k is incremented
/// and the phase returns to Approaching; on a non-crossing exit the phase
/// becomes Terminal.
StopPoint advance_to_stop(SdeState& s, const StopPoint& anchor, const ModelParams& m, const SimSettings& cfg,
                          NormalStream& rng, const TraceFn* trace = nullptr, CrossingEvent* coupling = nullptr);

struct InitialCondition {
  double x = -kPi;
  double p = 0.0;
  int k = 0;
};

/// Loops advance_to_stop until the first non-crossing exit, k_max crossings
/// or the time cap. Bit-reproducible given (params, init, seed, settings).
TrialRecord simulate_trial(const ModelParams& m, const InitialCondition& init, std::uint64_t seed,
                           const SimSettings& cfg, const TraceFn* trace = nullptr);

}  // namespace wash
