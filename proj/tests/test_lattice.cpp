#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "holstein/lattice.hpp"
#include "oracles.hpp"
#include "support.hpp"

using holstein::ErrorCode;
using holstein::LatticeRegion;
using holstein::Site;

TEST(GraphDistance, IntervalIsL1) {
  const auto r = LatticeRegion::box(std::vector<int>{0}, std::vector<int>{5});
  EXPECT_EQ(r.graph_distance({1}, {4}), 3);
  EXPECT_EQ(r.graph_distance({2}, {2}), 0);
}

TEST(GraphDistance, BoxWithHoleGoesAround) {
  const auto r = LatticeRegion::box({3, 3}, {Site{1, 1}});
  EXPECT_EQ(r.size(), 8u);
  EXPECT_EQ(r.graph_distance({0, 1}, {2, 1}), 4);
  EXPECT_FALSE(r.is_full_box());
}

TEST(GraphDistance, Errors) {
  const auto r = LatticeRegion::box(std::vector<int>{0}, std::vector<int>{5});
  EXPECT_ERROR_CODE(r.graph_distance({7}, {1}), ErrorCode::SiteOutsideRegion);
  const LatticeRegion split(1, {Site{0}, Site{1}, Site{3}});
  EXPECT_FALSE(split.graph_distance({0}, {3}).has_value());
  EXPECT_ERROR_CODE(split.distance_or_throw(0, 2), ErrorCode::Unreachable);
}

TEST(GraphDistance, MatchesFloydOracleOnRandomRegions) {
  gen::Gen g(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = g.region(3, 5, 0.25);
    const auto want = oracle::floyd_distances(r.sites());
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r.size(); ++j) ASSERT_EQ(r.distance_index(i, j), want[i][j]);
  }
}

TEST(GraphDistance, FullBoxEqualsL1) {
  const auto r = LatticeRegion::box({4, 3, 3});
  ASSERT_TRUE(r.is_full_box());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) EXPECT_EQ(r.distance_index(i, j), l1_distance(r.site(i), r.site(j)));
}

TEST(GraphDistance, SymmetryAndTriangleOnRandomTriples) {
  gen::Gen g(12);
  int checked = 0;
  while (checked < 10000) {
    const auto r = g.region(2, 6, 0.2);
    for (int t = 0; t < 500; ++t, ++checked) {
      const auto a = g.index(r.size()), b = g.index(r.size()), c = g.index(r.size());
      const int ab = r.distance_index(a, b), bc = r.distance_index(b, c), ac = r.distance_index(a, c);
      ASSERT_EQ(ab, r.distance_index(b, a));
      if (ab >= 0 && bc >= 0) {
        ASSERT_GE(ac, 0);
        ASSERT_LE(ac, ab + bc);
      }
    }
  }
}

TEST(Ball, Examples) {
  const auto line = LatticeRegion::box(std::vector<int>{-3}, std::vector<int>{3});
  EXPECT_EQ(line.ball({0}, 0), std::vector<Site>{Site{0}});
  EXPECT_EQ(line.ball({0}, 2), (std::vector<Site>{{-2}, {-1}, {0}, {1}, {2}}));
  const auto plane = LatticeRegion::box(std::vector<int>{-3, -3}, std::vector<int>{3, 3});
  EXPECT_EQ(plane.ball({0, 0}, 1).size(), 5u);
  EXPECT_ERROR_CODE(plane.ball({9, 0}, 1), ErrorCode::SiteOutsideRegion);
}

// sigma_D = 2D + 1, measured once on large boxes.
constexpr int kSigma[] = {0, 3, 5, 7};

TEST(Ball, VolumeAndBoundaryBoundsOnFullBoxes) {
  for (int d = 1; d <= 3; ++d) {
    const int half = d == 3 ? 5 : 9;
    const auto box = LatticeRegion::box(std::vector<int>(d, -half), std::vector<int>(d, half));
    const Site origin(std::vector<int>(d, 0));
    for (int radius = 0; radius <= half - 1; ++radius) {
      const auto ball = box.ball(origin, radius);
      const double rr = std::max(radius, 1);
      EXPECT_LE(ball.size(), kSigma[d] * std::pow(rr, d)) << "D=" << d << " R=" << radius;
      EXPECT_LE(box.boundary(ball).size(), kSigma[d] * std::pow(rr, d - 1)) << "D=" << d << " R=" << radius;
    }
  }
}

TEST(Boundary, Examples) {
  const auto line = LatticeRegion::box({10});
  EXPECT_TRUE(line.boundary(line.sites()).empty());
  EXPECT_EQ(line.boundary({{2}, {3}, {4}}), (std::vector<Site>{{2}, {4}}));
  EXPECT_EQ(line.interior({{2}, {3}, {4}}), std::vector<Site>{Site{3}});
  const auto plane = LatticeRegion::box(std::vector<int>{-6, -6}, std::vector<int>{6, 6});
  const auto ring = plane.boundary(plane.ball({0, 0}, 2));
  EXPECT_EQ(ring.size(), 8u);
  for (const auto& s : ring) EXPECT_EQ(std::abs(s.coords[0]) + std::abs(s.coords[1]), 2);
  EXPECT_ERROR_CODE(line.boundary({{11}}), ErrorCode::SubsetOutsideRegion);
}

TEST(Boundary, PartitionsGammaOnRandomSubsets) {
  gen::Gen g(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = g.region(3, 5, 0.1);
    std::vector<std::size_t> gamma;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (g.coin(0.5)) gamma.push_back(i);
    const auto bd = r.boundary_indices(gamma), in = r.interior_indices(gamma);
    std::set<std::size_t> both(bd.begin(), bd.end());
    for (auto i : in) ASSERT_TRUE(both.insert(i).second) << "boundary and interior overlap";
    ASSERT_EQ(both, std::set<std::size_t>(gamma.begin(), gamma.end()));
    for (auto b : bd) {
      bool outside = false;
      for (auto n : r.neighbors(b)) outside |= std::find(gamma.begin(), gamma.end(), n) == gamma.end();
      ASSERT_TRUE(outside);
    }
  }
}

TEST(Adjacency, SymmetricAndUnitL1) {
  gen::Gen g(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = g.region(3, 4, 0.2);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (auto j : r.neighbors(i)) {
        EXPECT_EQ(l1_distance(r.site(i), r.site(j)), 1);
        const auto& back = r.neighbors(j);
        EXPECT_NE(std::find(back.begin(), back.end(), i), back.end());
      }
  }
}
