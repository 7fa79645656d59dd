#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace wash {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Thrown when a parameter set cannot be constructed. The message names the
/// violated condition.
class ParamError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename Scalar>
struct PotentialValues {
  Scalar V;
  Scalar dV;
  Scalar d2V;
};

/// Tilted cosine potential V(x) = cos(x - x_a) - a (x - x_a), x_a = asin(a).
/// Local maxima sit at x = 2k*pi for every tilt in [0, 1).
template <typename Scalar = double>
class Washboard {
 public:
  Washboard() = default;
  explicit Washboard(Scalar alpha) : alpha_(alpha), x_alpha_(std::asin(alpha)) {
    if (!(alpha >= Scalar(0) && alpha < Scalar(1)))
      throw ParamError("tilt alpha must lie in [0, 1), got " + std::to_string(double(alpha)));
  }

  Scalar alpha() const { return alpha_; }
  Scalar x_alpha() const { return x_alpha_; }

  Scalar V(Scalar x) const { return std::cos(x - x_alpha_) - alpha_ * (x - x_alpha_); }
  Scalar dV(Scalar x) const { return -std::sin(x - x_alpha_) - alpha_; }
  Scalar d2V(Scalar x) const { return -std::cos(x - x_alpha_); }
  Scalar d3V(Scalar x) const { return std::sin(x - x_alpha_); }

  PotentialValues<Scalar> eval(Scalar x) const {
    const Scalar s = std::sin(x - x_alpha_);
    const Scalar c = std::cos(x - x_alpha_);
    return {c - alpha_ * (x - x_alpha_), -s - alpha_, -c};
  }

 private:
  Scalar alpha_ = Scalar(0);
  Scalar x_alpha_ = Scalar(0);
};

template <typename Scalar>
PotentialValues<Scalar> potential_eval(Scalar x, Scalar alpha) {
  return Washboard<Scalar>(alpha).eval(x);
}

/// Linearisation of the deterministic flow at the saddles x = 2k*pi.
/// beta = -V''(2k pi); lambda_plus/lambda_minus solve l^2 + gamma l - beta = 0.
struct SaddleAlgebra {
  double gamma = 0.0;
  double alpha = 0.0;
  double x_alpha = 0.0;
  double beta = 1.0;
  double lambda_plus = 1.0;
  double lambda_minus = -1.0;
  double theta = 0.0;

  Washboard<double> potential() const { return Washboard<double>(alpha); }
  double root_residual(double lambda) const { return lambda * lambda + gamma * lambda - beta; }
};

SaddleAlgebra saddle_algebra(double gamma, double alpha);

/// Open interval ((1+theta)^2/(3+2 theta), 1/2) of admissible window exponents.
std::pair<double, double> nu_window(double theta);

/// Largest theta with a nonempty nu-window: the positive root of 2 t^2 + 2 t - 1.
inline double max_feasible_theta() { return (std::sqrt(3.0) - 1.0) / 2.0; }

/// Full parameter set including the noise-dependent scale hierarchy.
/// Immutable after construction.
struct ModelParams : SaddleAlgebra {
  double epsilon = 0.0;
  double nu = 0.0;
  double eta_eps = 0.0;          // critical window width, epsilon^nu
  double sigma_eps = 0.0;        // epsilon * eta^(-1/(1+theta))
  double sigma_bar_eps = 0.0;    // sigma^(1+theta) * eta^(-theta)
  double sigma_tilde_eps = 0.0;  // sigma * epsilon^theta

  const SaddleAlgebra& saddle() const { return *this; }
};

/// Builds and validates a ModelParams. Throws ParamError when the nu-window is
/// empty, nu lies outside it, or any scale inequality fails at this epsilon.
ModelParams make_params(double gamma, double alpha, double epsilon, double nu);

/// psi_k(x) = -V'(x) - beta (x - 2k pi), the nonlinear part of the force near saddle k.
double saddle_remainder(double x, int k, const SaddleAlgebra& sys);

/// phi(X, y) = V''(X) y - [V'(X+y) - V'(X)], the remainder of the force linearised at X.
double nonlinear_remainder(double X, double y, const SaddleAlgebra& sys);

}  // namespace wash
