#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "holstein/statistics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace holstein;
using cd = std::complex<double>;

namespace {

ModelParams params(double gamma, double v_plus = 0.5) {
  ModelParams p;
  p.gamma = gamma;
  p.omega = 1.0;
  p.beta = 0.5;
  p.v_plus = v_plus;
  return p;
}

std::vector<IndexPair> vacuum_chain(const BasisEnumeration& b) {
  std::vector<IndexPair> out;
  for (std::size_t y = 0; y < b.region().size(); ++y) out.emplace_back(b.index(y, {}), b.index(0, {}));
  return out;
}

SweepConfig sweep(double gamma, int length, int kmax, std::size_t realizations, cd z = {0.25, 1e-3}) {
  SweepConfig c;
  c.params = params(gamma);
  c.basis = std::make_shared<const BasisEnumeration>(gen::chain(length), TruncationPolicy{kmax});
  c.pairs = vacuum_chain(*c.basis);
  c.energies = {z};
  c.realizations = realizations;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(ParallelFor, CapturesErrorsPerIndex) {
  std::vector<int> hit(10, 0);
  const auto errors = parallel_for(10, 3, [&](std::size_t i) {
    hit[i] = 1;
    if (i == 4) throw std::runtime_error("boom");
  });
  EXPECT_EQ(hit, std::vector<int>(10, 1));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(errors[i].empty(), i != 4);
}

TEST(Bootstrap, Helpers) {
  EXPECT_EQ(bootstrap_indices(7, 3, 2), bootstrap_indices(7, 3, 2));
  EXPECT_NE(bootstrap_indices(50, 3, 2), bootstrap_indices(50, 3, 3));
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(sample_stddev({1.0, 3.0}), std::sqrt(2.0));
  EXPECT_EQ(bootstrap_mean_stderr({5.0}, 1), 0.0);
  std::vector<double> v;
  gen::Gen g(61);
  for (int i = 0; i < 400; ++i) v.push_back(g.real(0.0, 1.0));
  EXPECT_NEAR(bootstrap_mean_stderr(v, 9), std::sqrt(1.0 / 12.0 / 400.0), 0.004);
}

TEST(Sweep, ZeroHoppingMatchesQuadrature) {
  auto c = sweep(0.0, 4, 1, 400);
  const auto res = fractional_moment_sweep(c);
  ASSERT_TRUE(res.failures.empty());
  // pair 0 is the diagonal vacuum element at site 0
  const double want = oracle::uniform_moment(0.5, c.energies[0], 0.5);
  const auto& row = res.rows[0];
  EXPECT_EQ(row.count, 400u);
  EXPECT_NEAR(row.mean, want, 4 * row.stderr_);
  for (std::size_t p = 1; p < c.pairs.size(); ++p) EXPECT_EQ(res.rows[p].mean, 0.0);
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  auto c = sweep(0.05, 6, 2, 12);
  c.energies.push_back({0.3, 5e-3});
  const auto one = fractional_moment_sweep(c);
  c.workers = 4;
  const auto four = fractional_moment_sweep(c);
  ASSERT_EQ(one.rows.size(), four.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].mean, four.rows[i].mean);
    EXPECT_EQ(one.rows[i].stderr_, four.rows[i].stderr_);
  }
  EXPECT_EQ(one.max_top_shell_weight, four.max_top_shell_weight);
}

TEST(Sweep, StableUnderHalvingEpsilon) {
  const auto a = fractional_moment_sweep(sweep(0.05, 6, 2, 100, {0.25, 1e-3}));
  const auto b = fractional_moment_sweep(sweep(0.05, 6, 2, 100, {0.25, 5e-4}));
  for (std::size_t p = 0; p < a.rows.size(); ++p) {
    const double sigma = std::hypot(a.rows[p].stderr_, b.rows[p].stderr_);
    EXPECT_LE(std::abs(a.rows[p].mean - b.rows[p].mean), 2 * sigma + 1e-15) << "pair " << p;
  }
}

TEST(Sweep, TopShellFlag) {
  auto c = sweep(0.2, 4, 1, 3);
  c.params.beta = 1.5;
  EXPECT_TRUE(fractional_moment_sweep(c).top_shell_flag);
  EXPECT_FALSE(fractional_moment_sweep(sweep(0.0, 4, 1, 3)).top_shell_flag);
}

TEST(Sweep, ConfigErrors) {
  auto c = sweep(0.05, 4, 1, 3);
  c.s = 1.0;
  EXPECT_ERROR_CODE(fractional_moment_sweep(c), ErrorCode::ConfigInvalid);
  c = sweep(0.05, 4, 1, 0);
  EXPECT_ERROR_CODE(fractional_moment_sweep(c), ErrorCode::ConfigInvalid);
  c = sweep(0.05, 4, 1, 3);
  c.pairs = {{0, 9999}};
  EXPECT_ERROR_CODE(fractional_moment_sweep(c), ErrorCode::ConfigInvalid);
}

TEST(DecayFit, RecoversPlantedSlope) {
  gen::Gen g(62);
  std::vector<double> d;
  for (int i = 0; i < 8; ++i) d.push_back(i);
  std::vector<std::vector<double>> samples;
  for (int r = 0; r < 200; ++r) {
    std::vector<double> row;
    for (double x : d) row.push_back(std::exp(-0.7 * x) * (1.0 + 0.3 * g.real(-1.0, 1.0)));
    samples.push_back(row);
  }
  const auto f = decay_fit(d, samples, DistanceKind::Lattice, 5);
  EXPECT_NEAR(f.rate, 0.7, 0.02);
  EXPECT_LE(f.ci_low, 0.7);
  EXPECT_GE(f.ci_high, 0.7);
  EXPECT_GT(f.stderr_, 0.0);
  EXPECT_EQ(f.distinct_distances, 8u);
  EXPECT_EQ(f.bootstrap_used, kBootstrapResamples);
}

TEST(DecayFit, Errors) {
  std::vector<std::vector<double>> samples(5, std::vector<double>(4, 1.0));
  EXPECT_ERROR_CODE(decay_fit({0, 1, 2, 2}, samples, DistanceKind::Lattice), ErrorCode::InsufficientDistances);
  samples[0][3] = 0.0;
  for (auto& row : samples) row[2] = 0.0;
  EXPECT_ERROR_CODE(decay_fit({0, 1, 2, 3}, samples, DistanceKind::Lattice), ErrorCode::NonpositiveMean);
}

TEST(DecayFit, ZeroHoppingOffDiagonalHasNoSlope) {
  auto c = sweep(0.0, 6, 1, 5);
  const auto res = fractional_moment_sweep(c);
  EXPECT_ERROR_CODE(decay_fit(c, res, 0, DistanceKind::Lattice, 0), ErrorCode::NonpositiveMean);
}

TEST(DecayFit, DistanceKinds) {
  for (auto k : {DistanceKind::Lattice, DistanceKind::Upsilon, DistanceKind::UpsilonPlusCollapsed, DistanceKind::D})
    EXPECT_EQ(parse_distance_kind(to_string(k)), k);
  EXPECT_FALSE(parse_distance_kind("euclid").has_value());
  PairDistances d;
  d.lattice = 2;
  d.upsilon = 3;
  d.collapsed = 0.5;
  d.d = 7.0;
  EXPECT_EQ(distance_value(d, DistanceKind::UpsilonPlusCollapsed), 3.5);
  EXPECT_EQ(distance_value(d, DistanceKind::D), 7.0);
}

TEST(DecayFit, RateFallsAsHoppingGrows) {
  double last = std::numeric_limits<double>::infinity();
  for (double gamma : {0.02, 0.05, 0.1, 0.2}) {
    auto c = sweep(gamma, 8, 1, 30);
    const auto f = decay_fit(c, fractional_moment_sweep(c), 0, DistanceKind::Lattice, 0);
    EXPECT_GT(f.rate, 0.0) << gamma;
    EXPECT_LE(f.rate, last) << gamma;
    last = f.rate;
  }
}

namespace {

TailConfig tail(double gamma) {
  TailConfig c;
  c.params = params(gamma);
  c.basis = std::make_shared<const BasisEnumeration>(gen::chain(gamma == 0.0 ? 3 : 8), TruncationPolicy{1});
  c.a = c.b = c.basis->index(1, {});
  c.z = {0.25, 1e-6};
  c.seed = 23;
  return c;
}

}  // namespace

TEST(Tail, ZeroHoppingMatchesAnalyticSurvival) {
  const auto c = tail(0.0);
  const auto r = tail_test(c);
  const double n = static_cast<double>(c.samples);
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    const double want = oracle::uniform_survival(0.5, c.z, r.t[i]);
    EXPECT_NEAR(r.survival[i], want, 4 * std::sqrt(want * (1 - want) / n) + 1.0 / n) << "t=" << r.t[i];
  }
  EXPECT_NEAR(r.slope, -1.0, 0.15);
  EXPECT_NEAR(r.envelope, 4.0, 0.5);  // t P -> 2 / V_+
}

TEST(Tail, WeakL1WithHopping) {
  const auto r = tail_test(tail(0.05));
  EXPECT_NEAR(r.slope, -1.0, 0.15);
  EXPECT_LE(r.envelope_growth, 3.0);
  for (double s : {0.25, 0.5, 0.75}) EXPECT_LE(r.moment(s), r.moment_bound(s) * 1.05) << s;
}

TEST(AllForOne, ConvexAndMatchesQuadrature) {
  const auto c = tail(0.0);
  const auto r = tail_test(c);
  const auto rep = allforone_check(r.abs_green, {0.75, 0.25, 0.5, 0.6});
  EXPECT_TRUE(rep.finite);
  EXPECT_TRUE(rep.log_convex);
  ASSERT_EQ(rep.s.front(), 0.25);
  for (std::size_t i = 0; i < rep.s.size(); ++i) {
    std::vector<double> v;
    for (double g : r.abs_green) v.push_back(std::pow(g, rep.s[i]));
    const double se = sample_stddev(v) / std::sqrt(static_cast<double>(v.size()));
    EXPECT_NEAR(rep.moments[i], oracle::uniform_moment(0.5, c.z, rep.s[i]), 4 * se) << rep.s[i];
  }
  EXPECT_ERROR_CODE(allforone_check(r.abs_green, {0.5, 1.0}), ErrorCode::ConfigInvalid);
}

TEST(AllForOne, ConvexOnRandomSamples) {
  gen::Gen g(63);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v;
    for (int i = 0; i < 100; ++i) v.push_back(std::exp(g.real(-5.0, 5.0)));
    EXPECT_TRUE(allforone_check(v, {0.1, 0.3, 0.5, 0.7, 0.9}).log_convex);
  }
}

TEST(AllForOne, KappaEnvelopeNearOne) {
  // (1 - s) E|G|^s stays bounded as s -> 1 for a weak-L1 variable
  const auto r = tail_test(tail(0.0));
  const auto rep = allforone_check(r.abs_green, {0.5, 0.8, 0.9, 0.95});
  EXPECT_LT(rep.kappa_hat, 10.0);
  for (std::size_t i = 0; i < rep.s.size(); ++i) EXPECT_LE((1 - rep.s[i]) * rep.moments[i], rep.kappa_hat);
}

TEST(CorrelatorSweep, ZeroHoppingGivesKronecker) {
  CorrelatorSweepConfig c;
  c.params = params(0.0);
  c.basis = std::make_shared<const BasisEnumeration>(gen::chain(6), TruncationPolicy{1});
  c.pairs = vacuum_chain(*c.basis);
  c.window = EnergyWindow::band_window(c.params, 0);
  for (int i = 0; i < 16; ++i) c.times.push_back(i * 2.0);
  c.realizations = 5;
  const auto r = correlator_sweep(c);
  EXPECT_NEAR(r.mean_q[0], 1.0, 1e-12);
  for (std::size_t p = 1; p < c.pairs.size(); ++p) EXPECT_NEAR(r.mean_q[p], 0.0, 1e-12);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_FALSE(r.fit.has_value());
}

TEST(CorrelatorSweep, DecaysWithHopping) {
  CorrelatorSweepConfig c;
  c.params = params(0.05);
  c.basis = std::make_shared<const BasisEnumeration>(gen::chain(8), TruncationPolicy{1});
  c.pairs = vacuum_chain(*c.basis);
  c.window = EnergyWindow::band_window(c.params, 0);
  for (int i = 0; i < 32; ++i) c.times.push_back(i * 3.0);
  c.realizations = 10;
  c.seed = 4;
  const auto r = correlator_sweep(c);
  c.workers = 3;
  const auto again = correlator_sweep(c);
  EXPECT_EQ(r.mean_q, again.mean_q);
  EXPECT_EQ(r.violations, 0u);
  ASSERT_TRUE(r.fit.has_value()) << r.fit_error;
  EXPECT_GT(r.fit->rate, 0.0);
  EXPECT_EQ(r.amplitude_samples, 10u * 8u * 32u);
}
