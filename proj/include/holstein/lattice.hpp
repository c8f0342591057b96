#pragma once

// Finite regions of Z^D with open boundaries: in-region graph distance,
// balls, boundaries and interiors.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <deque>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "holstein/errors.hpp"

namespace holstein {

/// A point of Z^D.
struct Site {
  std::vector<int> coords;

  Site() = default;
  explicit Site(std::vector<int> c) : coords(std::move(c)) {}
  Site(std::initializer_list<int> c) : coords(c) {}

  std::size_t dimension() const { return coords.size(); }
  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;
};

inline int l1_distance(const Site& a, const Site& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) d += std::abs(a.coords[i] - b.coords[i]);
  return d;
}

inline std::string to_string(const Site& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.coords.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s.coords[i]);
  }
  return out + ")";
}

/// Finite subset of Z^D. Sites are stored in lexicographic order and
/// addressed by their position in that order. Immutable after construction.
class LatticeRegion {
 public:
  static constexpr int kUnreachable = -1;

  /// All sites of Z^D with lower[i] <= x_i <= upper[i], minus `excluded`.
  static LatticeRegion box(const std::vector<int>& lower, const std::vector<int>& upper,
                           const std::vector<Site>& excluded = {}) {
    if (lower.empty() || lower.size() != upper.size())
      throw Error(ErrorCode::ConfigInvalid, "box bounds must share a positive dimension");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (upper[i] < lower[i]) throw Error(ErrorCode::ConfigInvalid, "box upper bound below lower bound");
    std::vector<Site> sites;
    std::vector<int> cur = lower;
    const std::size_t dim = lower.size();
    while (true) {
      Site s(cur);
      if (std::find(excluded.begin(), excluded.end(), s) == excluded.end()) sites.push_back(s);
      bool done = true;
      for (std::size_t i = dim; i-- > 0;) {
        if (++cur[i] <= upper[i]) {
          done = false;
          break;
        }
        cur[i] = lower[i];
      }
      if (done) break;
    }
    LatticeRegion region(static_cast<int>(dim), std::move(sites));
    region.full_box_ = excluded.empty();
    return region;
  }

  /// Box with extents L_i, coordinates 0..L_i-1.
  static LatticeRegion box(const std::vector<int>& extent, const std::vector<Site>& excluded = {}) {
    std::vector<int> lower(extent.size(), 0), upper(extent.size());
    for (std::size_t i = 0; i < extent.size(); ++i) {
      if (extent[i] < 1) throw Error(ErrorCode::ConfigInvalid, "box extent must be positive");
      upper[i] = extent[i] - 1;
    }
    return box(lower, upper, excluded);
  }

  LatticeRegion(int dimension, std::vector<Site> sites) : dimension_(dimension) {
    if (dimension < 1) throw Error(ErrorCode::ConfigInvalid, "dimension must be >= 1");
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    for (const auto& s : sites)
      if (static_cast<int>(s.dimension()) != dimension)
        throw Error(ErrorCode::ConfigInvalid, "site " + to_string(s) + " has wrong dimension");
    sites_ = std::move(sites);
    for (std::size_t i = 0; i < sites_.size(); ++i) index_.emplace(sites_[i], i);
    build_adjacency();
    build_distances();
  }

  int dimension() const { return dimension_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  bool is_full_box() const { return full_box_; }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_.at(i); }

  std::optional<std::size_t> find(const Site& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const Site& s) const { return index_.count(s) != 0; }

  std::size_t index_of(const Site& s) const {
    auto i = find(s);
    if (!i) throw Error(ErrorCode::SiteOutsideRegion, to_string(s));
    return *i;
  }

  bool adjacent(std::size_t i, std::size_t j) const { return distance_index(i, j) == 1; }

  /// In-region shortest-path length by index, or kUnreachable.
  int distance_index(std::size_t i, std::size_t j) const { return distances_[i * sites_.size() + j]; }

  /// In-region shortest-path length; throws Unreachable on disconnected pairs.
  int distance_or_throw(std::size_t i, std::size_t j) const {
    int d = distance_index(i, j);
    if (d == kUnreachable)
      throw Error(ErrorCode::Unreachable, to_string(sites_[i]) + " -> " + to_string(sites_[j]));
    return d;
  }

  /// Breadth-first graph distance within the region; nullopt when no path exists.
  std::optional<int> graph_distance(const Site& x, const Site& y) const {
    int d = distance_index(index_of(x), index_of(y));
    if (d == kUnreachable) return std::nullopt;
    return d;
  }

  std::vector<std::size_t> ball_indices(std::size_t center, int radius) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < sites_.size(); ++j) {
      int d = distance_index(center, j);
      if (d != kUnreachable && d <= radius) out.push_back(j);
    }
    return out;
  }

  std::vector<Site> ball(const Site& center, int radius) const {
    return to_sites(ball_indices(index_of(center), radius));
  }

  /// Sites of gamma with a neighbor in region \ gamma.
  std::vector<std::size_t> boundary_indices(const std::vector<std::size_t>& gamma) const {
    std::vector<char> in(sites_.size(), 0);
    for (auto g : gamma) {
      if (g >= sites_.size()) throw Error(ErrorCode::SubsetOutsideRegion, "index out of range");
      in[g] = 1;
    }
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < sites_.size(); ++g) {
      if (!in[g]) continue;
      for (auto n : adjacency_[g])
        if (!in[n]) {
          out.push_back(g);
          break;
        }
    }
    return out;
  }

  std::vector<std::size_t> interior_indices(const std::vector<std::size_t>& gamma) const {
    auto bd = boundary_indices(gamma);
    std::vector<std::size_t> sorted = gamma;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::size_t> out;
    std::set_difference(sorted.begin(), sorted.end(), bd.begin(), bd.end(), std::back_inserter(out));
    return out;
  }

  std::vector<Site> boundary(const std::vector<Site>& gamma) const {
    return to_sites(boundary_indices(subset_indices(gamma)));
  }

  std::vector<Site> interior(const std::vector<Site>& gamma) const {
    return to_sites(interior_indices(subset_indices(gamma)));
  }

  std::vector<std::size_t> subset_indices(const std::vector<Site>& gamma) const {
    std::vector<std::size_t> idx;
    idx.reserve(gamma.size());
    for (const auto& s : gamma) {
      auto i = find(s);
      if (!i) throw Error(ErrorCode::SubsetOutsideRegion, to_string(s));
      idx.push_back(*i);
    }
    return idx;
  }

  std::vector<Site> to_sites(const std::vector<std::size_t>& idx) const {
    std::vector<Site> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(sites_[i]);
    return out;
  }

 private:
  void build_adjacency() {
    adjacency_.assign(sites_.size(), {});
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      Site probe = sites_[i];
      for (int axis = 0; axis < dimension_; ++axis) {
        for (int step : {-1, 1}) {
          probe.coords[axis] += step;
          if (auto j = find(probe)) adjacency_[i].push_back(*j);
          probe.coords[axis] -= step;
        }
      }
      std::sort(adjacency_[i].begin(), adjacency_[i].end());
    }
  }

  void build_distances() {
    const std::size_t n = sites_.size();
    distances_.assign(n * n, kUnreachable);
    std::deque<std::size_t> queue;
    for (std::size_t src = 0; src < n; ++src) {
      int* row = distances_.data() + src * n;
      row[src] = 0;
      queue.push_back(src);
      while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        for (auto v : adjacency_[u]) {
          if (row[v] == kUnreachable) {
            row[v] = row[u] + 1;
            queue.push_back(v);
          }
        }
      }
    }
  }

  int dimension_ = 1;
  bool full_box_ = false;
  std::vector<Site> sites_;
  std::map<Site, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<int> distances_;
};

}  // namespace holstein
