#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace holstein {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // ordinary least-squares standard error
  double rms_residual = 0.0;
};

/// Least squares y = intercept + slope * x, optionally weighted.
inline LinearFit fit_line(std::span<const double> xs, std::span<const double> ys,
                          std::span<const double> weights = {}) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n || (!weights.empty() && weights.size() != n))
    throw std::invalid_argument("fit_line needs at least two matching points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * xs[i];
    sy += w * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (xs[i] - mx) * (xs[i] - mx);
    sxy += w * (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line needs two distinct abscissae");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double r = ys[i] - out.intercept - out.slope * xs[i];
    ss += w * r * r;
  }
  out.rms_residual = std::sqrt(ss / sw);
  out.slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return out;
}

}  // namespace holstein
