#pragma once

// Exact shortest open path through a small set of waypoints (Held-Karp
// dynamic programming over subsets).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace holstein {

/// Length of the shortest path start -> (all waypoints in any order) -> end.
///
/// `dist(u, v)` returns the pairwise distance between points, where points
/// are numbered 0 = start, 1..k = waypoints, k+1 = end. Runs in O(2^k k^2).
template <class Dist, class T = decltype(std::declval<Dist>()(0, 0))>
T shortest_waypoint_path(std::size_t waypoint_count, Dist&& dist) {
  const std::size_t k = waypoint_count;
  const std::size_t end = k + 1;
  if (k == 0) return dist(0, end);
  const std::size_t full = (std::size_t{1} << k) - 1;
  constexpr T kInf = std::numeric_limits<T>::max() / 4;
  // best[mask * k + j]: shortest path from start through `mask`, ending at waypoint j (in mask).
  std::vector<T> best((full + 1) * k, kInf);
  for (std::size_t j = 0; j < k; ++j) best[(std::size_t{1} << j) * k + j] = dist(0, j + 1);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!(mask >> j & 1)) continue;
      const T here = best[mask * k + j];
      if (here >= kInf) continue;
      for (std::size_t next = 0; next < k; ++next) {
        if (mask >> next & 1) continue;
        const std::size_t grown = mask | (std::size_t{1} << next);
        const T cand = here + dist(j + 1, next + 1);
        if (cand < best[grown * k + next]) best[grown * k + next] = cand;
      }
    }
  }
  T answer = kInf;
  for (std::size_t j = 0; j < k; ++j) {
    const T cand = best[full * k + j] + dist(j + 1, end);
    if (cand < answer) answer = cand;
  }
  return answer;
}

}  // namespace holstein
