#pragma once

// Model parameters and iid on-site disorder drawn from a counter-based
// generator keyed by (seed, realization, site).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "holstein/errors.hpp"
#include "holstein/lattice.hpp"

namespace holstein {

struct UniformDensity {};

/// Beta(a, b) law rescaled to [0, V_+]; a, b >= 1 keeps the density bounded.
struct BetaDensity {
  double a = 2.0;
  double b = 2.0;
};

using Density = std::variant<UniformDensity, BetaDensity>;

struct ModelParams {
  int dimension = 1;
  double gamma = 0.0;  // hopping strength
  double omega = 1.0;  // oscillator frequency
  std::complex<double> beta{0.0, 0.0};  // coupling alpha / omega
  double v_plus = 0.0;  // disorder amplitude, v_x in [0, V_+]
  Density density = UniformDensity{};

  /// delta = omega - V_+ - 4 D gamma; the spectral gap between bands when positive.
  double gap() const { return omega - v_plus - 4.0 * dimension * gamma; }
  bool has_gap() const { return gap() > 0.0; }

  /// Lower/upper edge of band I_k = [omega k, omega k + V_+ + 4 D gamma].
  double band_lower(int k) const { return omega * k; }
  double band_upper(int k) const { return omega * k + v_plus + 4.0 * dimension * gamma; }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
      throw Error(ErrorCode::ConfigInvalid, "model." + field + ": " + msg);
    };
    if (dimension < 1) fail("D", "must be >= 1");
    if (!std::isfinite(gamma) || gamma < 0.0) fail("gamma", "must be finite and >= 0");
    if (!std::isfinite(omega) || omega <= 0.0) fail("omega", "must be finite and > 0");
    if (!std::isfinite(beta.real()) || !std::isfinite(beta.imag())) fail("beta", "must be finite");
    if (!std::isfinite(v_plus) || v_plus < 0.0) fail("v_plus", "must be finite and >= 0");
    if (const auto* bd = std::get_if<BetaDensity>(&density)) {
      if (!(bd->a >= 1.0) || !(bd->b >= 1.0)) fail("density", "beta parameters must be >= 1");
    }
  }
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: output i is mix64(key + i * golden). Satisfies
/// UniformRandomBitGenerator, so it can drive <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
      : key_(mix64(mix64(mix64(seed) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Draw one value on [0, V_+] from the configured density.
inline double draw_potential(CounterRng& rng, const ModelParams& params) {
  if (params.v_plus == 0.0) return 0.0;
  if (const auto* bd = std::get_if<BetaDensity>(&params.density)) {
    std::gamma_distribution<double> ga(bd->a, 1.0), gb(bd->b, 1.0);
    const double x = ga(rng), y = gb(rng);
    return params.v_plus * x / (x + y);
  }
  return params.v_plus * rng.uniform();
}

struct DisorderSample {
  std::vector<double> values;  // v_x by site index
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
};

/// iid potentials, reproducible from (seed, realization) and independent of
/// the order in which sites are visited.
inline DisorderSample sample_disorder(const LatticeRegion& region, const ModelParams& params, std::uint64_t seed,
                                      std::uint64_t realization) {
  if (params.v_plus < 0.0) throw Error(ErrorCode::ConfigInvalid, "v_plus must be >= 0");
  DisorderSample out;
  out.seed = seed;
  out.realization = realization;
  out.values.resize(region.size());
  for (std::size_t s = 0; s < region.size(); ++s) {
    CounterRng rng(seed, realization, s);
    out.values[s] = draw_potential(rng, params);
  }
  return out;
}

}  // namespace holstein
