#include "wash/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wash {

HermiteSpline::HermiteSpline(std::vector<double> x, std::vector<double> y, std::vector<double> dydx)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(dydx)) {
  if (x_.size() < 2 || y_.size() != x_.size() || d_.size() != x_.size())
    throw std::invalid_argument("HermiteSpline: need at least two nodes with matching sizes");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("HermiteSpline: nodes must be strictly increasing");

  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double delta = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    const bool bracket_extremum = (d_[i] > 0.0) != (d_[i + 1] > 0.0);
    if (delta == 0.0 || bracket_extremum) continue;
    if (d_[i] * delta < 0.0) d_[i] = 0.0;
    if (d_[i + 1] * delta < 0.0) d_[i + 1] = 0.0;
    const double a = d_[i] / delta, b = d_[i + 1] / delta;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      d_[i] = tau * a * delta;
      d_[i + 1] = tau * b * delta;
    }
  }
}

std::size_t HermiteSpline::interval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(it - x_.begin()) - 1, x_.size() - 2);
}

double HermiteSpline::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
         (t3 - t2) * h * d_[i + 1];
}

double HermiteSpline::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) / h * y_[i] + (3 * t2 - 4 * t + 1) * d_[i] + (-6 * t2 + 6 * t) / h * y_[i + 1] +
         (3 * t2 - 2 * t) * d_[i + 1];
}

double HermiteSpline::second_derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  return ((12 * t - 6) * y_[i] + (6 * t - 4) * h * d_[i] + (-12 * t + 6) * y_[i + 1] +
          (6 * t - 2) * h * d_[i + 1]) /
         (h * h);
}

}  // namespace wash
