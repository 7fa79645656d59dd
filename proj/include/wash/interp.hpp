#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wash {

/// Piecewise cubic Hermite interpolant on nodal values and derivatives.
///
/// Nodal derivatives are supplied by the caller (typically exact slopes of an
/// ODE solution). On intervals where the data are strictly monotone the
/// Fritsch-Carlson limiter is applied so the interpolant stays monotone there;
/// intervals that bracket an extremum keep their exact slopes.
class HermiteSpline {
 public:
  HermiteSpline() = default;
  HermiteSpline(std::vector<double> x, std::vector<double> y, std::vector<double> dydx);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  std::span<const double> nodes() const { return x_; }
  std::span<const double> values() const { return y_; }
  std::span<const double> slopes() const { return d_; }
  bool empty() const { return x_.empty(); }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_, y_, d_;
};

}  // namespace wash
