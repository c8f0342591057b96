#pragma once

// Single-mode displacement operator D(beta) = exp(beta b^+ - conj(beta) b):
// matrix elements in the number basis, generalized Laguerre polynomials and
// the weighted sums used to control off-shell hopping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "holstein/errors.hpp"

namespace holstein::oscillator {

using complex = std::complex<double>;

/// Value represented as mantissa * exp(log_scale); keeps Laguerre
/// recurrences finite where binomial growth would overflow a double.
struct ScaledValue {
  double mantissa = 0.0;
  double log_scale = 0.0;

  double value() const { return mantissa * std::exp(log_scale); }
};

/// L_n^{(alpha)}(x) by the three-term recurrence, rescaled on the fly.
inline ScaledValue laguerre_scaled(int n, int alpha, double x) {
  constexpr double kRescale = 1e150;
  const double log_rescale = std::log(kRescale);
  ScaledValue out{1.0, 0.0};
  if (n == 0) return out;
  double prev = 1.0;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescale) {
      cur /= kRescale;
      prev /= kRescale;
      out.log_scale += log_rescale;
    }
  }
  out.mantissa = cur;
  return out;
}

/// Generalized Laguerre polynomial L_n^{(alpha)}(x); alpha = 0 gives L_n.
inline double laguerre(int n, int alpha, double x) {
  if (n < 0) throw Error(ErrorCode::ConfigInvalid, "laguerre order must be nonnegative");
  return laguerre_scaled(n, alpha, x).value();
}

inline double laguerre(int n, double x) { return laguerre(n, 0, x); }

/// <m|D(beta)|n>. For m >= n this is
///   sqrt(n!/m!) beta^(m-n) exp(-|beta|^2/2) L_n^{(m-n)}(|beta|^2),
/// evaluated with log-gamma; m < n uses <m|D(beta)|n> = conj(<n|D(-beta)|m>).
inline complex displacement_element(int m, int n, complex beta) {
  if (m < 0 || n < 0) throw Error(ErrorCode::ConfigInvalid, "occupation numbers must be nonnegative");
  if (m < n) return std::conj(displacement_element(n, m, -beta));
  const double x = std::norm(beta);
  if (x == 0.0) return m == n ? complex(1.0, 0.0) : complex(0.0, 0.0);
  const int shift = m - n;
  const ScaledValue lag = laguerre_scaled(n, shift, x);
  const double log_mag = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)) +
                         shift * 0.5 * std::log(x) - 0.5 * x + lag.log_scale;
  const double mag = std::exp(log_mag) * lag.mantissa;
  if (shift == 0) return {mag, 0.0};
  return std::polar(1.0, shift * std::arg(beta)) * mag;
}

/// Dense table of <m|D(beta)|n> for 0 <= m, n <= max_occupation.
class DisplacementTable {
 public:
  DisplacementTable() = default;
  DisplacementTable(int max_occupation, complex beta)
      : size_(max_occupation + 1), beta_(beta), data_(static_cast<std::size_t>(size_) * size_) {
    for (int m = 0; m < size_; ++m)
      for (int n = 0; n < size_; ++n) data_[static_cast<std::size_t>(m) * size_ + n] = displacement_element(m, n, beta);
  }

  int max_occupation() const { return size_ - 1; }
  complex beta() const { return beta_; }
  complex operator()(int m, int n) const { return data_[static_cast<std::size_t>(m) * size_ + n]; }

 private:
  int size_ = 0;
  complex beta_{};
  std::vector<complex> data_;
};

// Adaptive truncation of infinite sums over the occupation number m.

struct TruncationRule {
  int block = 32;
  double relative_tolerance = 1e-12;
  int hard_cap = 4096;
};

struct TruncatedSum {
  double value = 0.0;
  int cutoff = 0;  // number of terms summed: m = 0 .. cutoff-1
};

/// Sums term(m) in blocks until a block past `min_cutoff` contributes less
/// than rule.relative_tolerance of the running total.
template <class Term>
TruncatedSum adaptive_sum(Term&& term, int min_cutoff, const TruncationRule& rule = {}) {
  double total = 0.0;
  int m = 0;
  while (true) {
    if (m >= rule.hard_cap)
      throw Error(ErrorCode::TruncationNotConverged,
                  "cutoff exceeded hard cap " + std::to_string(rule.hard_cap));
    double block = 0.0;
    const int end = std::min(m + rule.block, rule.hard_cap);
    for (; m < end; ++m) block += term(m);
    total += block;
    if (m >= min_cutoff && std::abs(block) <= rule.relative_tolerance * std::abs(total)) return {total, m};
  }
}

namespace detail {
inline int displacement_peak_cutoff(int n, double beta_abs) {
  const double edge = std::sqrt(static_cast<double>(n)) + beta_abs + 1.0;
  return static_cast<int>(std::ceil(edge * edge)) + 1;
}
}  // namespace detail

/// sum_m exp(2 mu (m-n)) |<m|D(beta)|n>|^2, truncated adaptively.
inline TruncatedSum weighted_square_sum(int n, complex beta, double mu, const TruncationRule& rule = {}) {
  const int min_cutoff = detail::displacement_peak_cutoff(n, std::exp(std::max(mu, 0.0)) * std::abs(beta));
  return adaptive_sum(
      [&](int m) { return std::exp(2.0 * mu * (m - n)) * std::norm(displacement_element(m, n, beta)); },
      min_cutoff, rule);
}

/// Closed form exp((e^{2mu}-1)|beta|^2) L_n(-|beta|^2 (e^mu - e^-mu)^2).
inline double weighted_square_sum_closed_form(int n, complex beta, double mu) {
  const double b2 = std::norm(beta);
  const double s = std::exp(mu) - std::exp(-mu);
  const ScaledValue lag = laguerre_scaled(n, 0, -b2 * s * s);
  return lag.mantissa * std::exp(std::expm1(2.0 * mu) * b2 + lag.log_scale);
}

/// sum_m exp(mu |sqrt(n) - sqrt(m)|) |<m|D(beta)|n>|^p.
inline TruncatedSum dispsum_profile(int n, complex beta, double mu, double p, const TruncationRule& rule = {}) {
  if (!(mu > 0.0)) throw Error(ErrorCode::ConfigInvalid, "dispsum_profile needs mu > 0");
  if (!(p > 0.0 && p <= 2.0)) throw Error(ErrorCode::ConfigInvalid, "dispsum_profile needs p in (0,2]");
  const double sn = std::sqrt(static_cast<double>(n));
  const int min_cutoff = detail::displacement_peak_cutoff(n, std::abs(beta) + mu);
  return adaptive_sum(
      [&](int m) {
        return std::exp(mu * std::abs(sn - std::sqrt(static_cast<double>(m)))) *
               std::pow(std::abs(displacement_element(m, n, beta)), p);
      },
      min_cutoff, rule);
}

/// sum_m (m v 1)^alpha exp(-mu |sqrt(m) - sqrt(n)|).
inline TruncatedSum sqrt_metric_sum(int n, double mu, double alpha, const TruncationRule& rule = {}) {
  if (!(mu > 0.0)) throw Error(ErrorCode::ConfigInvalid, "sqrt_metric_sum needs mu > 0");
  const double sn = std::sqrt(static_cast<double>(n));
  // Past the peak of m^alpha exp(-mu sqrt(m)) the terms decrease monotonically.
  const double peak = alpha > 0.0 ? std::pow(2.0 * alpha / mu, 2.0) : 0.0;
  const int min_cutoff = static_cast<int>(std::ceil(std::max<double>(n, peak))) + 1;
  return adaptive_sum(
      [&](int m) {
        const double mm = std::max(m, 1);
        return std::pow(mm, alpha) * std::exp(-mu * std::abs(std::sqrt(static_cast<double>(m)) - sn));
      },
      min_cutoff, rule);
}

}  // namespace holstein::oscillator
