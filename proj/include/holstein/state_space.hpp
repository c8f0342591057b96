#pragma once

// Oscillator configurations, the truncated product basis |x, m>, and the
// metric family on basis states (Upsilon, r, shell-collapsed R^(k), walk
// length L and d = L + r).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "holstein/errors.hpp"
#include "holstein/held_karp.hpp"
#include "holstein/lattice.hpp"

namespace holstein {

/// Sparse map site-index -> positive excitation count, with cached total.
class OscillatorConfig {
 public:
  using Entry = std::pair<std::uint32_t, std::uint32_t>;

  OscillatorConfig() = default;

  /// Entries may come in any order; zero counts are dropped, repeated sites rejected.
  static OscillatorConfig from_entries(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end());
    OscillatorConfig out;
    for (const auto& e : entries) {
      if (!out.entries_.empty() && out.entries_.back().first == e.first)
        throw Error(ErrorCode::ConfigInvalid, "repeated site in oscillator configuration");
      if (e.second == 0) continue;
      out.entries_.push_back(e);
      out.total_ += static_cast<int>(e.second);
    }
    return out;
  }

  static OscillatorConfig from_dense(const std::vector<int>& counts) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] < 0) throw Error(ErrorCode::ConfigInvalid, "negative excitation count");
      if (counts[i] > 0) entries.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(counts[i]));
    }
    return from_entries(std::move(entries));
  }

  static OscillatorConfig single(std::size_t site, int count) {
    return from_entries({{static_cast<std::uint32_t>(site), static_cast<std::uint32_t>(count)}});
  }

  int at(std::size_t site) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{static_cast<std::uint32_t>(site), 0});
    if (it != entries_.end() && it->first == site) return static_cast<int>(it->second);
    return 0;
  }

  /// Copy with the count at `site` replaced.
  OscillatorConfig with(std::size_t site, int count) const {
    std::vector<Entry> entries;
    entries.reserve(entries_.size() + 1);
    for (const auto& e : entries_)
      if (e.first != site) entries.push_back(e);
    if (count > 0) entries.emplace_back(static_cast<std::uint32_t>(site), static_cast<std::uint32_t>(count));
    return from_entries(std::move(entries));
  }

  int total() const { return total_; }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<int> dense(std::size_t region_size) const {
    std::vector<int> out(region_size, 0);
    for (const auto& e : entries_) out.at(e.first) = static_cast<int>(e.second);
    return out;
  }

  // Ordered by total excitation number, then lexicographically by entries.
  std::strong_ordering operator<=>(const OscillatorConfig& other) const {
    if (auto c = total_ <=> other.total_; c != 0) return c;
    return entries_ <=> other.entries_;
  }
  bool operator==(const OscillatorConfig& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  int total_ = 0;
};

struct OscillatorConfigHash {
  std::size_t operator()(const OscillatorConfig& c) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [site, count] : c.entries()) {
      h = (h ^ site) * 0x100000001b3ULL;
      h = (h ^ count) * 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

inline std::string to_string(const OscillatorConfig& c, const LatticeRegion& region) {
  std::string out = "{";
  bool first = true;
  for (const auto& [site, count] : c.entries()) {
    if (!first) out += ",";
    first = false;
    out += to_string(region.site(site)) + ":" + std::to_string(count);
  }
  return out + "}";
}

/// |x, m>: particle site index plus oscillator configuration.
struct BasisState {
  std::size_t site = 0;
  OscillatorConfig config;

  bool operator==(const BasisState&) const = default;
};

struct TruncationPolicy {
  int max_total = 0;
  std::optional<int> per_site_cap;
  std::size_t max_states = 4'000'000;
};

/// Number of oscillator configurations on `sites` sites with total <= max_total.
inline double count_configs(std::size_t sites, const TruncationPolicy& policy) {
  // ways[t] = configurations of the sites processed so far with total t
  std::vector<double> ways(static_cast<std::size_t>(policy.max_total) + 1, 0.0);
  ways[0] = 1.0;
  const int cap = policy.per_site_cap.value_or(policy.max_total);
  for (std::size_t s = 0; s < sites; ++s) {
    std::vector<double> next(ways.size(), 0.0);
    for (std::size_t t = 0; t < ways.size(); ++t) {
      if (ways[t] == 0.0) continue;
      for (int c = 0; c <= cap && t + c < ways.size(); ++c) next[t + c] += ways[t];
    }
    ways = std::move(next);
  }
  double total = 0.0;
  for (double w : ways) total += w;
  return total;
}

/// Truncated product basis {|x, m> : x in region, N(m) <= max_total}.
///
/// Ordering is site-major (sites in region order), then configurations in
/// OscillatorConfig order, so state index = site * config_count + config index.
class BasisEnumeration {
 public:
  BasisEnumeration(std::shared_ptr<const LatticeRegion> region, TruncationPolicy policy)
      : region_(std::move(region)), policy_(policy) {
    if (!region_ || region_->empty()) throw Error(ErrorCode::EmptyRegion, "basis over an empty region");
    if (policy_.max_total < 0) throw Error(ErrorCode::ConfigInvalid, "max_total must be >= 0");
    if (policy_.per_site_cap && *policy_.per_site_cap < 0) throw Error(ErrorCode::ConfigInvalid, "per_site_cap must be >= 0");
    const double expected = static_cast<double>(region_->size()) * count_configs(region_->size(), policy_);
    if (expected > static_cast<double>(policy_.max_states))
      throw Error(ErrorCode::BasisTooLarge, std::to_string(expected) + " states exceed cap " +
                                                std::to_string(policy_.max_states));
    enumerate_configs();
    for (std::size_t c = 0; c < configs_.size(); ++c) config_index_.emplace(configs_[c], c);
    shells_.assign(static_cast<std::size_t>(policy_.max_total) + 1, {});
    for (std::size_t i = 0; i < size(); ++i) shells_[static_cast<std::size_t>(total(i))].push_back(i);
  }

  const LatticeRegion& region() const { return *region_; }
  const std::shared_ptr<const LatticeRegion>& region_ptr() const { return region_; }
  const TruncationPolicy& policy() const { return policy_; }
  int max_total() const { return policy_.max_total; }

  std::size_t size() const { return region_->size() * configs_.size(); }
  std::size_t config_count() const { return configs_.size(); }
  const std::vector<OscillatorConfig>& configs() const { return configs_; }

  std::size_t site_of(std::size_t i) const { return i / configs_.size(); }
  std::size_t config_index_of(std::size_t i) const { return i % configs_.size(); }
  const OscillatorConfig& config_of(std::size_t i) const { return configs_[config_index_of(i)]; }
  int total(std::size_t i) const { return config_of(i).total(); }
  BasisState state(std::size_t i) const { return {site_of(i), config_of(i)}; }

  std::optional<std::size_t> find_config(const OscillatorConfig& c) const {
    auto it = config_index_.find(c);
    if (it == config_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find(std::size_t site, const OscillatorConfig& c) const {
    if (site >= region_->size()) return std::nullopt;
    auto ci = find_config(c);
    if (!ci) return std::nullopt;
    return site * configs_.size() + *ci;
  }

  std::size_t index(std::size_t site, const OscillatorConfig& c) const {
    auto i = find(site, c);
    if (!i) throw Error(ErrorCode::SelectorMismatch, "state outside the truncated basis");
    return *i;
  }

  std::size_t index(const BasisState& s) const { return index(s.site, s.config); }

  /// State indices with N(m) = k (empty above the truncation).
  const std::vector<std::size_t>& shell(int k) const {
    static const std::vector<std::size_t> kEmpty;
    if (k < 0 || k > policy_.max_total) return kEmpty;
    return shells_[static_cast<std::size_t>(k)];
  }

  std::string describe(std::size_t i) const {
    return to_string(region_->site(site_of(i))) + " " + to_string(config_of(i), *region_);
  }

 private:
  void enumerate_configs() {
    const std::size_t n = region_->size();
    const int cap = policy_.per_site_cap.value_or(policy_.max_total);
    std::vector<int> counts(n, 0);
    auto recurse = [&](auto&& self, std::size_t site, int remaining) -> void {
      if (site == n) {
        configs_.push_back(OscillatorConfig::from_dense(counts));
        return;
      }
      for (int c = 0; c <= std::min(cap, remaining); ++c) {
        counts[site] = c;
        self(self, site + 1, remaining - c);
      }
      counts[site] = 0;
    };
    recurse(recurse, 0, policy_.max_total);
    std::sort(configs_.begin(), configs_.end());
  }

  std::shared_ptr<const LatticeRegion> region_;
  TruncationPolicy policy_;
  std::vector<OscillatorConfig> configs_;
  std::unordered_map<OscillatorConfig, std::size_t, OscillatorConfigHash> config_index_;
  std::vector<std::vector<std::size_t>> shells_;
};

// ---------------------------------------------------------------------------
// Metrics on configurations and basis states.

/// Radius of the smallest ball around x holding every site where m > 0 and
/// m != xi; 0 when there is no such site.
inline int radius_R(const LatticeRegion& region, const OscillatorConfig& m, const OscillatorConfig& xi, std::size_t x) {
  int r = 0;
  for (const auto& [u, count] : m.entries())
    if (static_cast<int>(count) != xi.at(u)) r = std::max(r, region.distance_or_throw(x, u));
  return r;
}

inline int upsilon(const LatticeRegion& region, std::size_t x, const OscillatorConfig& m, std::size_t y,
                   const OscillatorConfig& xi) {
  return std::max({region.distance_or_throw(x, y), radius_R(region, m, xi, x), radius_R(region, xi, m, y)});
}

namespace detail {
/// Calls f(site, m(site), xi(site)) for every site in the union of supports.
template <class F>
void for_each_union_site(const OscillatorConfig& m, const OscillatorConfig& xi, F&& f) {
  auto a = m.entries().begin(), ae = m.entries().end();
  auto b = xi.entries().begin(), be = xi.entries().end();
  while (a != ae || b != be) {
    if (b == be || (a != ae && a->first < b->first)) {
      f(a->first, static_cast<int>(a->second), 0);
      ++a;
    } else if (a == ae || b->first < a->first) {
      f(b->first, 0, static_cast<int>(b->second));
      ++b;
    } else {
      f(a->first, static_cast<int>(a->second), static_cast<int>(b->second));
      ++a;
      ++b;
    }
  }
}
}  // namespace detail

/// r(m, xi) = sum_u sqrt|m(u) - xi(u)|.
inline double r_metric(const OscillatorConfig& m, const OscillatorConfig& xi) {
  double r = 0.0;
  detail::for_each_union_site(m, xi, [&](std::size_t, int a, int b) { r += std::sqrt(std::abs(a - b)); });
  return r;
}

/// Sites where m and xi differ.
inline std::vector<std::size_t> disagreement_sites(const OscillatorConfig& m, const OscillatorConfig& xi) {
  std::vector<std::size_t> out;
  detail::for_each_union_site(m, xi, [&](std::size_t u, int a, int b) {
    if (a != b) out.push_back(u);
  });
  return out;
}

/// r-distance from m to the shell {xi : N(xi) = k}.
///
/// Additions are concentrated on one site; removals are taken from the
/// largest counts first.
inline double shell_distance(const OscillatorConfig& m, int k, std::size_t region_size) {
  if (region_size == 0) throw Error(ErrorCode::EmptyRegion, "shell distance on an empty region");
  const int n = m.total();
  if (n <= k) return std::sqrt(static_cast<double>(k - n));
  std::vector<int> counts;
  for (const auto& e : m.entries()) counts.push_back(static_cast<int>(e.second));
  std::sort(counts.begin(), counts.end(), std::greater<>());
  int remaining = n - k;
  double dist = 0.0;
  for (int c : counts) {
    if (remaining == 0) break;
    const int take = std::min(c, remaining);
    dist += std::sqrt(static_cast<double>(take));
    remaining -= take;
  }
  return dist;
}

/// r with the shell N = k collapsed to a point.
inline double collapsed_metric(const OscillatorConfig& m, const OscillatorConfig& xi, int k, std::size_t region_size) {
  return std::min(r_metric(m, xi), shell_distance(m, k, region_size) + shell_distance(xi, k, region_size));
}

inline constexpr std::size_t kMaxWaypoints = 12;

/// Shortest nearest-neighbor walk x -> y in the region visiting every site
/// where m and xi differ.
inline int walk_metric_L(const LatticeRegion& region, std::size_t x, const OscillatorConfig& m, std::size_t y,
                         const OscillatorConfig& xi) {
  const auto waypoints = disagreement_sites(m, xi);
  if (waypoints.size() > kMaxWaypoints)
    throw Error(ErrorCode::TooManyWaypoints, std::to_string(waypoints.size()) + " waypoints");
  auto point = [&](std::size_t i) { return i == 0 ? x : (i <= waypoints.size() ? waypoints[i - 1] : y); };
  return shortest_waypoint_path(waypoints.size(), [&](std::size_t a, std::size_t b) {
    return region.distance_or_throw(point(a), point(b));
  });
}

inline double d_metric(const LatticeRegion& region, std::size_t x, const OscillatorConfig& m, std::size_t y,
                       const OscillatorConfig& xi) {
  return walk_metric_L(region, x, m, y, xi) + r_metric(m, xi);
}

/// All metrics between two basis states, as reported alongside probe results.
struct PairDistances {
  int lattice = 0;       // ||x - y||
  int upsilon = 0;       // Upsilon
  double collapsed = 0;  // R^(k)
  int walk = 0;          // L
  double r = 0;          // r
  double d = 0;          // L + r
};

inline PairDistances pair_distances(const BasisEnumeration& basis, std::size_t a, std::size_t b, int k) {
  const auto& region = basis.region();
  const auto sa = basis.state(a), sb = basis.state(b);
  PairDistances out;
  out.lattice = region.distance_or_throw(sa.site, sb.site);
  out.upsilon = upsilon(region, sa.site, sa.config, sb.site, sb.config);
  out.collapsed = collapsed_metric(sa.config, sb.config, k, region.size());
  out.r = r_metric(sa.config, sb.config);
  if (disagreement_sites(sa.config, sb.config).size() <= kMaxWaypoints) {
    out.walk = walk_metric_L(region, sa.site, sa.config, sb.site, sb.config);
    out.d = out.walk + out.r;
  } else {
    out.walk = -1;
    out.d = -1;
  }
  return out;
}

}  // namespace holstein
