#include "wash/params.hpp"

#include <cmath>
#include <sstream>

namespace wash {

SaddleAlgebra saddle_algebra(double gamma, double alpha) {
  if (!(gamma > 0.0)) throw ParamError("friction gamma must be positive");
  const Washboard<double> pot(alpha);  // validates alpha

  SaddleAlgebra s;
  s.gamma = gamma;
  s.alpha = alpha;
  s.x_alpha = pot.x_alpha();
  s.beta = std::sqrt((1.0 - alpha) * (1.0 + alpha));
  const double disc = std::sqrt(gamma * gamma + 4.0 * s.beta);
  // lambda_plus = (-gamma + disc)/2 written without cancellation.
  s.lambda_plus = 2.0 * s.beta / (gamma + disc);
  s.lambda_minus = -(gamma + disc) / 2.0;
  s.theta = 2.0 * gamma / (disc - gamma);
  return s;
}

std::pair<double, double> nu_window(double theta) {
  return {(1.0 + theta) * (1.0 + theta) / (3.0 + 2.0 * theta), 0.5};
}

namespace {

void require_less(double lhs, double rhs, const char* what) {
  if (!(lhs < rhs)) {
    std::ostringstream os;
    os << "scale ordering violated: " << what << " (" << lhs << " >= " << rhs << ")";
    throw ParamError(os.str());
  }
}

}  // namespace

ModelParams make_params(double gamma, double alpha, double epsilon, double nu) {
  if (!(epsilon > 0.0)) throw ParamError("noise amplitude epsilon must be positive");

  ModelParams p;
  static_cast<SaddleAlgebra&>(p) = saddle_algebra(gamma, alpha);
  p.epsilon = epsilon;
  p.nu = nu;

  const auto [lo, hi] = nu_window(p.theta);
  if (!(lo < hi)) {
    std::ostringstream os;
    os << "nu-window is empty: theta = " << p.theta << " exceeds the feasibility bound (sqrt(3)-1)/2 = "
       << max_feasible_theta() << "; decrease gamma";
    throw ParamError(os.str());
  }
  if (!(nu > lo && nu < hi)) {
    std::ostringstream os;
    os << "nu = " << nu << " outside the admissible window (" << lo << ", " << hi << ")";
    throw ParamError(os.str());
  }

  const double t = p.theta;
  p.eta_eps = std::pow(epsilon, nu);
  p.sigma_eps = epsilon * std::pow(p.eta_eps, -1.0 / (1.0 + t));
  p.sigma_tilde_eps = p.sigma_eps * std::pow(epsilon, t);
  p.sigma_bar_eps = std::pow(p.sigma_eps, 1.0 + t) * std::pow(p.eta_eps, -t);

  require_less(p.sigma_tilde_eps, p.sigma_bar_eps, "sigma_tilde < sigma_bar");
  require_less(p.sigma_bar_eps, p.sigma_eps, "sigma_bar < sigma");
  require_less(p.sigma_eps, p.eta_eps, "sigma < eta");
  require_less(p.sigma_eps, 1.0, "sigma < 1");
  require_less(epsilon, p.eta_eps * p.eta_eps, "epsilon < eta^2");
  require_less(p.eta_eps * p.eta_eps, p.sigma_tilde_eps, "eta^2 < sigma_tilde");
  return p;
}

double saddle_remainder(double x, int k, const SaddleAlgebra& sys) {
  // sin(h - x_a) expanded with sin(x_a) = alpha, cos(x_a) = beta.
  const double h = x - kTwoPi * k;
  const double s = std::sin(0.5 * h);
  return sys.beta * (std::sin(h) - h) + 2.0 * sys.alpha * s * s;
}

double nonlinear_remainder(double X, double y, const SaddleAlgebra& sys) {
  const double u = X - sys.x_alpha;
  // V'(X+y) - V'(X) = -2 cos(u + y/2) sin(y/2)
  return -std::cos(u) * y + 2.0 * std::cos(u + 0.5 * y) * std::sin(0.5 * y);
}

}  // namespace wash
