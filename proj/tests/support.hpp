#pragma once

// Hand-rolled generators and small helpers shared by the unit tests.

#include <gtest/gtest.h>

#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "holstein/errors.hpp"
#include "holstein/lattice.hpp"
#include "holstein/state_space.hpp"

#define EXPECT_ERROR_CODE(stmt, expected)                                     \
  do {                                                                        \
    try {                                                                     \
      stmt;                                                                   \
      ADD_FAILURE() << "expected " << holstein::to_string(expected);          \
    } catch (const holstein::Error& e_) {                                     \
      EXPECT_EQ(holstein::to_string(e_.code()), holstein::to_string(expected)) \
          << e_.what();                                                       \
    }                                                                         \
  } while (0)

namespace gen {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p) { return real(0.0, 1.0) < p; }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  /// Box of dimension 1..max_dim with random extents, some sites knocked out.
  holstein::LatticeRegion region(int max_dim, int max_extent, double knockout) {
    const int d = integer(1, max_dim);
    std::vector<int> extent(d);
    for (auto& e : extent) e = integer(1, max_extent);
    const auto full = holstein::LatticeRegion::box(extent);
    std::vector<holstein::Site> excluded;
    for (const auto& s : full.sites())
      if (coin(knockout) && excluded.size() + 1 < full.size()) excluded.push_back(s);
    return holstein::LatticeRegion::box(extent, excluded);
  }

  holstein::OscillatorConfig config(std::size_t sites, int max_total) {
    const int total = integer(0, max_total);
    std::vector<int> dense(sites, 0);
    for (int i = 0; i < total; ++i) ++dense[index(sites)];
    return holstein::OscillatorConfig::from_dense(dense);
  }

  std::complex<double> beta(double max_abs) {
    const double r = real(0.0, max_abs), phi = real(0.0, 6.283185307179586);
    return std::polar(r, phi);
  }
};

inline std::shared_ptr<const holstein::LatticeRegion> chain(int length) {
  return std::make_shared<const holstein::LatticeRegion>(holstein::LatticeRegion::box({length}));
}

}  // namespace gen
