#pragma once

// Monte Carlo over disorder realizations: fractional moments, decay fits,
// weak-L1 tail probes and correlator averages.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "holstein/assembly.hpp"
#include "holstein/errors.hpp"
#include "holstein/fit.hpp"
#include "holstein/model.hpp"
#include "holstein/resolvent.hpp"
#include "holstein/state_space.hpp"

namespace holstein {

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Runs task(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// captured per index and returned; slot i is empty when task i succeeded.
inline std::vector<std::string> parallel_for(std::size_t n, unsigned workers,
                                             const std::function<void(std::size_t)>& task) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown failure";
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (count == 1) {
    body();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  return errors;
}

// ---------------------------------------------------------------------------
// Bootstrap

inline constexpr std::size_t kBootstrapResamples = 200;

/// Deterministic resampling indices: resample r draws n indices with
/// CounterRng(seed, r, 0).
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t r) {
  CounterRng rng(seed, r, 0x626f6f74ULL);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng() % n);
  return idx;
}

inline double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Bootstrap standard error of the sample mean.
inline double bootstrap_mean_stderr(const std::vector<double>& values, std::uint64_t seed,
                                    std::size_t resamples = kBootstrapResamples) {
  if (values.size() < 2) return 0.0;
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    double m = 0.0;
    for (auto i : bootstrap_indices(values.size(), seed, r)) m += values[i];
    means.push_back(m / static_cast<double>(values.size()));
  }
  return sample_stddev(means);
}

// ---------------------------------------------------------------------------
// Fractional-moment sweep

struct SweepConfig {
  ModelParams params;
  std::shared_ptr<const BasisEnumeration> basis;
  SubspaceSelector selector = SubspaceSelector::full();
  std::vector<IndexPair> pairs;  // (row, column) basis indices
  std::vector<cplx> energies;
  double s = 0.5;
  std::size_t realizations = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (!basis) throw Error(ErrorCode::ConfigInvalid, "sweep: basis missing");
    if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::ConfigInvalid, "sweep.s: must lie in (0, 1)");
    if (realizations < 1) throw Error(ErrorCode::ConfigInvalid, "sweep.realizations: must be >= 1");
    if (pairs.empty()) throw Error(ErrorCode::ConfigInvalid, "sweep.pairs: empty");
    if (energies.empty()) throw Error(ErrorCode::ConfigInvalid, "sweep.energies: empty");
    for (const auto& [a, b] : pairs)
      if (a >= basis->size() || b >= basis->size()) throw Error(ErrorCode::ConfigInvalid, "sweep.pairs: index out of range");
    params.validate();
  }
};

/// Raw |G| for one realization, laid out [energy][pair].
struct RealizationSamples {
  std::size_t realization = 0;
  bool ok = false;
  std::string error;
  std::vector<double> abs_green;
  double top_shell_weight = 0.0;
};

struct SweepRow {
  std::size_t pair = 0;
  std::size_t energy = 0;
  double mean = 0.0;  // mean |G|^s over successful realizations
  double stderr_ = 0.0;
  std::size_t count = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // energy-major, then pair
  std::vector<RealizationSamples> samples;
  std::vector<std::string> failures;  // "realization i: message"
  double max_top_shell_weight = 0.0;
  bool top_shell_flag = false;

  std::size_t pair_count = 0;
  std::size_t energy_count = 0;

  /// |G|^s samples (successful realizations, in order) for one (pair, energy).
  std::vector<double> moment_samples(std::size_t pair, std::size_t energy, double s) const {
    std::vector<double> out;
    for (const auto& r : samples)
      if (r.ok) out.push_back(std::pow(r.abs_green[energy * pair_count + pair], s));
    return out;
  }
};

/// |G| for every (energy, pair) at one realization.
inline RealizationSamples sweep_realization(const SweepConfig& cfg, std::size_t i) {
  RealizationSamples out;
  out.realization = i;
  const auto& basis = *cfg.basis;
  const DisorderSample dis = sample_disorder(basis.region(), cfg.params, cfg.seed, i);
  const OperatorMatrix op = assemble(basis, cfg.params, dis, cfg.selector);
  out.abs_green.assign(cfg.energies.size() * cfg.pairs.size(), 0.0);
  for (std::size_t e = 0; e < cfg.energies.size(); ++e) {
    const ShiftedSolver solver(op, cfg.energies[e]);
    std::map<std::size_t, Eigen::VectorXcd> columns;
    for (std::size_t p = 0; p < cfg.pairs.size(); ++p) {
      const auto [a, b] = cfg.pairs[p];
      const auto la = op.local(a), lb = op.local(b);
      if (!la || !lb) continue;
      auto it = columns.find(b);
      if (it == columns.end()) {
        it = columns.emplace(b, solver.column(*lb)).first;
        out.top_shell_weight = std::max(out.top_shell_weight, top_shell_weight(basis, op, it->second));
      }
      out.abs_green[e * cfg.pairs.size() + p] = std::abs(it->second(static_cast<Eigen::Index>(*la)));
    }
  }
  out.ok = true;
  return out;
}

/// Realizations run in parallel; results are folded in realization order so
/// the tables do not depend on the worker count.
inline SweepResult fractional_moment_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult res;
  res.pair_count = cfg.pairs.size();
  res.energy_count = cfg.energies.size();
  res.samples.resize(cfg.realizations);
  const auto errors = parallel_for(cfg.realizations, cfg.workers,
                                   [&](std::size_t i) { res.samples[i] = sweep_realization(cfg, i); });
  for (std::size_t i = 0; i < cfg.realizations; ++i) {
    if (!errors[i].empty()) {
      res.samples[i] = RealizationSamples{};
      res.samples[i].realization = i;
      res.samples[i].error = errors[i];
      res.failures.push_back("realization " + std::to_string(i) + ": " + errors[i]);
      continue;
    }
    res.max_top_shell_weight = std::max(res.max_top_shell_weight, res.samples[i].top_shell_weight);
  }
  res.top_shell_flag = res.max_top_shell_weight > kTopShellFlagThreshold;
  for (std::size_t e = 0; e < cfg.energies.size(); ++e) {
    for (std::size_t p = 0; p < cfg.pairs.size(); ++p) {
      const auto v = res.moment_samples(p, e, cfg.s);
      SweepRow row{p, e, 0.0, 0.0, v.size()};
      for (double x : v) row.mean += x;
      if (!v.empty()) row.mean /= static_cast<double>(v.size());
      row.stderr_ = bootstrap_mean_stderr(v, mix64(cfg.seed ^ (e * 0x10001ULL + p)));
      res.rows.push_back(row);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Decay fits

enum class DistanceKind { Lattice, Upsilon, UpsilonPlusCollapsed, D };

inline const char* to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::Lattice: return "lattice";
    case DistanceKind::Upsilon: return "upsilon";
    case DistanceKind::UpsilonPlusCollapsed: return "upsilon+collapsed";
    case DistanceKind::D: return "d";
  }
  return "?";
}

inline std::optional<DistanceKind> parse_distance_kind(const std::string& s) {
  for (auto k : {DistanceKind::Lattice, DistanceKind::Upsilon, DistanceKind::UpsilonPlusCollapsed, DistanceKind::D})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline double distance_value(const PairDistances& d, DistanceKind kind) {
  switch (kind) {
    case DistanceKind::Lattice: return d.lattice;
    case DistanceKind::Upsilon: return d.upsilon;
    case DistanceKind::UpsilonPlusCollapsed: return d.upsilon + d.collapsed;
    case DistanceKind::D: return d.d;
  }
  return 0.0;
}

struct DecayFit {
  double rate = 0.0;  // mu-hat: fitted decay rate, log(mean) ~ intercept - rate * distance
  double intercept = 0.0;
  double stderr_ = 0.0;  // bootstrap
  double ci_low = 0.0;   // 95% percentile interval
  double ci_high = 0.0;
  double rms_residual = 0.0;
  std::size_t distinct_distances = 0;
  std::size_t bootstrap_used = 0;
  DistanceKind kind = DistanceKind::Lattice;
};

inline LinearFit fit_log_means(const std::vector<double>& distances, const std::vector<double>& means) {
  std::vector<double> ys;
  ys.reserve(means.size());
  for (double m : means) ys.push_back(std::log(m));
  return fit_line(distances, ys);
}

/// Least squares of log(mean) against distance, with a realization bootstrap.
/// `samples[r][p]` is the statistic for realization r and pair p.
inline DecayFit decay_fit(const std::vector<double>& distances, const std::vector<std::vector<double>>& samples,
                          DistanceKind kind, std::uint64_t seed = 0, std::size_t resamples = kBootstrapResamples) {
  const std::size_t np = distances.size();
  std::set<double> distinct;
  for (double d : distances)
    if (d >= 0.0) distinct.insert(d);
  if (distinct.size() < 4)
    throw Error(ErrorCode::InsufficientDistances, std::to_string(distinct.size()) + " distinct distances, need 4");
  if (samples.empty()) throw Error(ErrorCode::NonpositiveMean, "no samples");
  auto means_of = [&](const std::vector<std::size_t>& rows) {
    std::vector<double> m(np, 0.0);
    for (auto r : rows)
      for (std::size_t p = 0; p < np; ++p) m[p] += samples[r][p];
    for (auto& x : m) x /= static_cast<double>(rows.size());
    return m;
  };
  std::vector<std::size_t> all(samples.size());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  const auto means = means_of(all);
  for (std::size_t p = 0; p < np; ++p)
    if (!(means[p] > 0.0))
      throw Error(ErrorCode::NonpositiveMean, "mean at distance " + std::to_string(distances[p]) + " is not positive");

  const LinearFit base = fit_log_means(distances, means);
  DecayFit out;
  out.kind = kind;
  out.rate = -base.slope;
  out.intercept = base.intercept;
  out.rms_residual = base.rms_residual;
  out.distinct_distances = distinct.size();

  std::vector<double> rates;
  for (std::size_t r = 0; r < resamples; ++r) {
    const auto m = means_of(bootstrap_indices(samples.size(), seed, r));
    if (std::any_of(m.begin(), m.end(), [](double x) { return !(x > 0.0); })) continue;
    rates.push_back(-fit_log_means(distances, m).slope);
  }
  out.bootstrap_used = rates.size();
  out.stderr_ = sample_stddev(rates);
  out.ci_low = rates.empty() ? out.rate : quantile(rates, 0.025);
  out.ci_high = rates.empty() ? out.rate : quantile(rates, 0.975);
  return out;
}

/// Decay fit of a sweep at one energy, distances computed from the basis.
inline DecayFit decay_fit(const SweepConfig& cfg, const SweepResult& res, std::size_t energy, DistanceKind kind, int k) {
  std::vector<double> dist;
  for (const auto& [a, b] : cfg.pairs) dist.push_back(distance_value(pair_distances(*cfg.basis, a, b, k), kind));
  std::vector<std::vector<double>> rows;
  for (const auto& r : res.samples) {
    if (!r.ok) continue;
    std::vector<double> row;
    for (std::size_t p = 0; p < cfg.pairs.size(); ++p)
      row.push_back(std::pow(r.abs_green[energy * cfg.pairs.size() + p], cfg.s));
    rows.push_back(std::move(row));
  }
  return decay_fit(dist, rows, kind, mix64(cfg.seed + 0x66697400ULL + energy));
}

// ---------------------------------------------------------------------------
// Weak-L1 tail

struct TailConfig {
  ModelParams params;
  std::shared_ptr<const BasisEnumeration> basis;
  std::size_t a = 0, b = 0;  // basis indices
  cplx z;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::size_t realization = 0;  // frozen background disorder
  double t_min = 1.0, t_max = 1e5;
  int points_per_decade = 8;
  double fit_low = 10.0, fit_high = 1e4;
};

struct TailResult {
  std::vector<double> t;
  std::vector<double> survival;      // P[|G| > t]
  std::vector<std::size_t> counts;   // exceedance counts
  double slope = 0.0;                // weighted fit of log P against log t on [fit_low, fit_high]
  double slope_stderr = 0.0;
  double envelope = 0.0;             // max_t t P[|G| > t] over the fit range
  std::vector<double> decade_envelope;  // max t P per decade of the fit range
  double envelope_growth = 0.0;      // max ratio of successive decade envelopes
  std::vector<double> abs_green;

  /// E|G|^s from the samples, and the weak-L1 bound C^s / (1 - s).
  double moment(double s) const {
    double m = 0.0;
    for (double g : abs_green) m += std::pow(g, s);
    return abs_green.empty() ? 0.0 : m / static_cast<double>(abs_green.size());
  }
  double moment_bound(double s) const { return std::pow(envelope, s) / (1.0 - s); }
};

/// Conditional resampling of v_x and v_y at the sites of a and b with all
/// other potentials frozen.
inline TailResult tail_test(const TailConfig& cfg) {
  if (!cfg.basis) throw Error(ErrorCode::ConfigInvalid, "tail: basis missing");
  if (cfg.samples < 1) throw Error(ErrorCode::ConfigInvalid, "tail.samples: must be >= 1");
  cfg.params.validate();
  const auto& basis = *cfg.basis;
  const std::size_t x = basis.site_of(cfg.a), y = basis.site_of(cfg.b);
  DisorderSample dis = sample_disorder(basis.region(), cfg.params, cfg.seed, cfg.realization);
  const OperatorMatrix op = assemble(basis, cfg.params, dis, SubspaceSelector::full());
  const Eigen::MatrixXcd base = op.dense();
  std::vector<Eigen::Index> on_x, on_y;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis.site_of(i) == x) on_x.push_back(static_cast<Eigen::Index>(i));
    if (basis.site_of(i) == y && y != x) on_y.push_back(static_cast<Eigen::Index>(i));
  }
  TailResult out;
  out.abs_green.reserve(cfg.samples);
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
  e(static_cast<Eigen::Index>(cfg.b)) = 1.0;
  for (std::size_t j = 0; j < cfg.samples; ++j) {
    CounterRng rng(cfg.seed, cfg.realization, (std::uint64_t{1} << 40) + j);
    const double vx = draw_potential(rng, cfg.params);
    const double vy = y != x ? draw_potential(rng, cfg.params) : vx;
    Eigen::MatrixXcd m = base;
    for (auto i : on_x) m(i, i) += vx - dis.values[x];
    for (auto i : on_y) m(i, i) += vy - dis.values[y];
    m.diagonal().array() -= cfg.z;
    const Eigen::VectorXcd u = m.partialPivLu().solve(e);
    out.abs_green.push_back(std::abs(u(static_cast<Eigen::Index>(cfg.a))));
  }

  std::vector<double> sorted = out.abs_green;
  std::sort(sorted.begin(), sorted.end());
  const int decades_lo = static_cast<int>(std::floor(std::log10(cfg.t_min) * cfg.points_per_decade));
  const int decades_hi = static_cast<int>(std::ceil(std::log10(cfg.t_max) * cfg.points_per_decade));
  std::vector<double> fx, fy, fw;
  std::map<int, double> decade_max;
  for (int q = decades_lo; q <= decades_hi; ++q) {
    const double t = std::pow(10.0, static_cast<double>(q) / cfg.points_per_decade);
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
    const double p = static_cast<double>(above) / static_cast<double>(sorted.size());
    out.t.push_back(t);
    out.survival.push_back(p);
    out.counts.push_back(above);
    const bool in_fit = t >= cfg.fit_low * (1 - 1e-12) && t <= cfg.fit_high * (1 + 1e-12);
    if (in_fit) {
      out.envelope = std::max(out.envelope, t * p);
      const int dec = static_cast<int>(std::floor(std::log10(t) + 1e-9));
      if (t < cfg.fit_high * (1 - 1e-12)) decade_max[dec] = std::max(decade_max[dec], t * p);
      if (above > 0) {
        fx.push_back(std::log(t));
        fy.push_back(std::log(p));
        fw.push_back(static_cast<double>(above));
      }
    }
  }
  for (const auto& [dec, v] : decade_max) out.decade_envelope.push_back(v);
  for (std::size_t i = 1; i < out.decade_envelope.size(); ++i)
    if (out.decade_envelope[i - 1] > 0.0)
      out.envelope_growth = std::max(out.envelope_growth, out.decade_envelope[i] / out.decade_envelope[i - 1]);
  if (fx.size() >= 2) {
    const LinearFit f = fit_line(fx, fy, fw);
    out.slope = f.slope;
    out.slope_stderr = f.slope_stderr;
  } else {
    out.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// ---------------------------------------------------------------------------
// All-for-one consistency

struct AllForOneReport {
  std::vector<double> s;
  std::vector<double> moments;  // E|G|^s
  bool finite = true;
  bool log_convex = true;
  double max_convexity_violation = 0.0;  // positive part of midpoint excess in log
  double kappa_hat = 0.0;               // max_s (1 - s) E|G|^s
};

/// Moments of a common sample of |G| across a grid of s in (0, 1).
inline AllForOneReport allforone_check(const std::vector<double>& abs_green, std::vector<double> s_grid) {
  for (double s : s_grid)
    if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::ConfigInvalid, "s grid must lie in (0, 1)");
  std::sort(s_grid.begin(), s_grid.end());
  AllForOneReport out;
  out.s = s_grid;
  for (double s : s_grid) {
    double m = 0.0;
    for (double g : abs_green) m += std::pow(g, s);
    m = abs_green.empty() ? 0.0 : m / static_cast<double>(abs_green.size());
    out.moments.push_back(m);
    if (!std::isfinite(m)) out.finite = false;
    out.kappa_hat = std::max(out.kappa_hat, (1.0 - s) * m);
  }
  for (std::size_t i = 1; i + 1 < s_grid.size(); ++i) {
    const double lam = (s_grid[i + 1] - s_grid[i]) / (s_grid[i + 1] - s_grid[i - 1]);
    const double chord = lam * std::log(out.moments[i - 1]) + (1.0 - lam) * std::log(out.moments[i + 1]);
    const double excess = std::log(out.moments[i]) - chord;
    if (excess > 1e-12 * std::max(1.0, std::abs(chord))) out.log_convex = false;
    out.max_convexity_violation = std::max(out.max_convexity_violation, excess);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlator sweep

struct CorrelatorSweepConfig {
  ModelParams params;
  std::shared_ptr<const BasisEnumeration> basis;
  std::vector<IndexPair> pairs;
  EnergyWindow window;
  std::vector<double> times;
  std::size_t realizations = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double tolerance = 1e-10;
};

struct CorrelatorSweepResult {
  std::vector<double> mean_q;  // per pair
  std::vector<double> stderr_q;
  std::vector<std::vector<double>> q_samples;  // [realization][pair], successful realizations only
  std::size_t amplitude_samples = 0;
  std::size_t violations = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max(amplitude - Q)
  std::optional<DecayFit> fit;  // E[Q] against ||x - y||, when >= 4 distances and positive means
  std::string fit_error;
  std::vector<std::string> failures;
};

inline CorrelatorSweepResult correlator_sweep(const CorrelatorSweepConfig& cfg) {
  if (!cfg.basis) throw Error(ErrorCode::ConfigInvalid, "correlator: basis missing");
  cfg.params.validate();
  if (cfg.basis->size() > kDefaultDenseLimit)
    throw Error(ErrorCode::DimensionTooLarge, std::to_string(cfg.basis->size()) + " > dense limit");
  for (const auto& [a, b] : cfg.pairs)
    if (a >= cfg.basis->size() || b >= cfg.basis->size())
      throw Error(ErrorCode::ConfigInvalid, "correlator.pairs: index out of range");
  struct Slot {
    std::vector<double> q;
    std::size_t amplitudes = 0, violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();
  };
  std::vector<Slot> slots(cfg.realizations);
  const auto errors = parallel_for(cfg.realizations, cfg.workers, [&](std::size_t i) {
    const DisorderSample dis = sample_disorder(cfg.basis->region(), cfg.params, cfg.seed, i);
    const OperatorMatrix op = assemble(*cfg.basis, cfg.params, dis, SubspaceSelector::full());
    const Spectrum spec = spectrum(op, true);
    Slot& slot = slots[i];
    for (const auto& [a, b] : cfg.pairs) {
      const auto dyn = dynamical_amplitude(spec, a, b, cfg.window, cfg.times);
      slot.q.push_back(dyn.q_bound);
      for (double amp : dyn.amplitudes) {
        ++slot.amplitudes;
        slot.max_excess = std::max(slot.max_excess, amp - dyn.q_bound);
        if (amp > dyn.q_bound + cfg.tolerance) ++slot.violations;
      }
    }
  });
  CorrelatorSweepResult out;
  for (std::size_t i = 0; i < cfg.realizations; ++i) {
    if (!errors[i].empty()) {
      out.failures.push_back("realization " + std::to_string(i) + ": " + errors[i]);
      continue;
    }
    out.q_samples.push_back(slots[i].q);
    out.amplitude_samples += slots[i].amplitudes;
    out.violations += slots[i].violations;
    out.max_excess = std::max(out.max_excess, slots[i].max_excess);
  }
  for (std::size_t p = 0; p < cfg.pairs.size(); ++p) {
    std::vector<double> v;
    for (const auto& row : out.q_samples) v.push_back(row[p]);
    double m = 0.0;
    for (double x : v) m += x;
    out.mean_q.push_back(v.empty() ? 0.0 : m / static_cast<double>(v.size()));
    out.stderr_q.push_back(bootstrap_mean_stderr(v, mix64(cfg.seed ^ (0x71ULL + p))));
  }
  std::vector<double> dist;
  for (const auto& [a, b] : cfg.pairs)
    dist.push_back(cfg.basis->region().distance_index(cfg.basis->site_of(a), cfg.basis->site_of(b)));
  try {
    if (!out.q_samples.empty())
      out.fit = decay_fit(dist, out.q_samples, DistanceKind::Lattice, mix64(cfg.seed + 0x7175ULL));
  } catch (const Error& e) {
    out.fit_error = e.what();
  }
  return out;
}

}  // namespace holstein
