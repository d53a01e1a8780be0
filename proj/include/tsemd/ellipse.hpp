#pragma once

#include <cmath>
#include <numbers>

namespace tsemd {

/// Centre (x0, y0), semi-axis a along direction theta and b across it.
/// Normalized form has a >= b > 0 and theta in [-pi/2, pi/2).
struct Ellipse {
  double x0 = 0.0, y0 = 0.0;
  double a = 1.0, b = 1.0;
  double theta = 0.0;

  /// ((x-x0)cos t + (y-y0)sin t)^2/a^2 + ((x-x0)sin t - (y-y0)cos t)^2/b^2 - 1
  double quadratic(double x, double y) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = x - x0, dy = y - y0;
    const double u = dx * c + dy * s, v = dx * s - dy * c;
    return u * u / (a * a) + v * v / (b * b) - 1.0;
  }
  bool contains(double x, double y) const { return quadratic(x, y) <= 0.0; }
  double area() const { return std::numbers::pi * a * b; }
};

}  // namespace tsemd
