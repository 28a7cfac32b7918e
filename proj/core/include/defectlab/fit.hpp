#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace defectlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_ci95 = 0.0;  // half-width
  int points = 0;
};

/// Ordinary least squares y = intercept + slope*x with the usual residual
/// variance estimate; the 95% band uses Student t quantiles.
inline LinearFit fit_linear(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_linear: need >= 2 matching points");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_linear: degenerate abscissae");

  LinearFit f;
  f.points = static_cast<int>(x.size());
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    const double var = ss / (n - 2.0);
    f.slope_stderr = std::sqrt(var / sxx);
    static const double t95[] = {12.706, 4.303, 3.182, 2.776, 2.571,
                                 2.447,  2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131};
    const auto df = static_cast<std::size_t>(x.size()) - 2;
    const double t = df <= 15 ? t95[df - 1] : 1.96;
    f.slope_ci95 = t * f.slope_stderr;
  }
  return f;
}

}  // namespace defectlab
