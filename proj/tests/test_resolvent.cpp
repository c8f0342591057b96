#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "holstein/fit.hpp"
#include "holstein/resolvent.hpp"
#include "support.hpp"

using namespace holstein;
using cd = std::complex<double>;

namespace {

ModelParams params(double gamma, cd beta, double v_plus = 0.5) {
  ModelParams p;
  p.gamma = gamma;
  p.omega = 1.0;
  p.beta = beta;
  p.v_plus = v_plus;
  return p;
}

std::vector<std::pair<std::size_t, std::size_t>> random_pairs(gen::Gen& g, std::size_t n, int count) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (int i = 0; i < count; ++i) out.emplace_back(g.index(n), g.index(n));
  return out;
}

}  // namespace

TEST(Greens, DiagonalAtZeroHopping) {
  const BasisEnumeration b(gen::chain(4), TruncationPolicy{2});
  const auto p = params(0.0, 0.5);
  const auto dis = sample_disorder(b.region(), p, 2, 0);
  const auto h = assemble(b, p, dis, SubspaceSelector::full());
  const cd z(0.25, 1e-3);
  for (std::size_t i = 0; i < b.size(); i += 5) {
    const cd want = 1.0 / (b.total(i) + dis.values[b.site_of(i)] - z);
    EXPECT_LE(std::abs(greens_element(h, {i, i, z}) - want), 1e-12 * std::abs(want));
    EXPECT_EQ(greens_element(h, {i, (i + 1) % b.size(), z}), cd(0.0));
  }
}

TEST(Greens, TwoSiteMatchesHandInverse) {
  const BasisEnumeration b(gen::chain(2), TruncationPolicy{0});
  const auto p = params(0.3, 0.8);
  DisorderSample dis;
  dis.values = {0.1, 0.4};
  const auto h = assemble(b, p, dis, SubspaceSelector::full());
  const cd z(0.2, 0.05), t = -0.3 * std::exp(-0.64);
  const cd a = 0.6 + 0.1 - z, d = 0.6 + 0.4 - z, det = a * d - t * t;
  EXPECT_LE(std::abs(greens_element(h, {0, 0, z}) - d / det), 1e-14);
  EXPECT_LE(std::abs(greens_element(h, {1, 1, z}) - a / det), 1e-14);
  EXPECT_LE(std::abs(greens_element(h, {0, 1, z}) + t / det), 1e-14);
}

TEST(Greens, OutsideOperatorIsZero) {
  const BasisEnumeration b(gen::chain(3), TruncationPolicy{1});
  const auto p = params(0.1, 0.5);
  const auto h = assemble(b, p, sample_disorder(b.region(), p, 1, 0), SubspaceSelector::band_out(0));
  EXPECT_EQ(greens_element(h, {b.index(0, {}), b.index(1, OscillatorConfig::single(1, 1)), cd(0.2, 0.1)}), cd(0.0));
}

TEST(Greens, ConjugateTransposeSymmetry) {
  gen::Gen g(51);
  for (int t = 0; t < 10; ++t) {
    const BasisEnumeration b(gen::chain(g.integer(2, 6)), TruncationPolicy{2});
    const auto p = params(g.real(0.0, 0.2), g.beta(1.5));
    const auto h = assemble(b, p, sample_disorder(b.region(), p, 5, t), SubspaceSelector::full());
    const cd z(g.real(-0.5, 3.0), g.real(1e-3, 0.5));
    const ShiftedSolver plus(h, z), minus(h, std::conj(z));
    for (int q = 0; q < 10; ++q) {
      const auto i = static_cast<Eigen::Index>(g.index(b.size())), j = static_cast<Eigen::Index>(g.index(b.size()));
      const cd gij = plus.column(static_cast<std::size_t>(j))(i);
      const cd gji = minus.column(static_cast<std::size_t>(i))(j);
      ASSERT_LE(std::abs(gij - std::conj(gji)), 1e-10 * std::max(1.0, std::abs(gij)));
    }
  }
}

TEST(Greens, NormBoundedByInverseDistance) {
  gen::Gen g(52);
  for (int t = 0; t < 20; ++t) {
    const BasisEnumeration b(gen::chain(g.integer(2, 6)), TruncationPolicy{2});
    const auto p = params(g.real(0.0, 0.2), g.beta(1.5));
    const auto h = assemble(b, p, sample_disorder(b.region(), p, 6, t), SubspaceSelector::full());
    const cd z(g.real(-0.5, 3.0), g.real(1e-3, 0.3));
    const auto ev = spectrum(h).values;
    const double dist = (ev.array() - z).abs().minCoeff();
    const Eigen::MatrixXcd inv = (h.dense() - z * Eigen::MatrixXcd::Identity(h.matrix.rows(), h.matrix.cols())).inverse();
    const double norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(inv).singularValues()(0);
    EXPECT_LE(norm, (1.0 + 1e-9) / dist);
    EXPECT_NEAR(1.0 / smallest_singular_value(h, z), norm, 1e-9 * norm);
  }
}

TEST(Greens, SingularShift) {
  const BasisEnumeration b(gen::chain(3), TruncationPolicy{1});
  const auto p = params(0.0, 0.5);
  const auto dis = sample_disorder(b.region(), p, 1, 0);
  const auto h = assemble(b, p, dis, SubspaceSelector::full());
  EXPECT_ERROR_CODE(greens_element(h, {0, 0, cd(dis.values[0], 0.0)}), ErrorCode::SingularShift);
  const auto p2 = params(0.1, 0.5);
  const auto h2 = assemble(b, p2, dis, SubspaceSelector::full());
  const double e = spectrum(h2).values(2);
  EXPECT_ERROR_CODE(
      {
        const ShiftedSolver s(h2, cd(e, 0.0));
        for (std::size_t i = 0; i < b.size(); ++i) s.column(i);
      },
      ErrorCode::SingularShift);
}

TEST(TopShell, WeightFraction) {
  const BasisEnumeration b(gen::chain(2), TruncationPolicy{1});
  const auto p = params(0.0, 0.5);
  const auto h = assemble(b, p, sample_disorder(b.region(), p, 1, 0), SubspaceSelector::full());
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.size()));
  u(static_cast<Eigen::Index>(b.index(0, {}))) = 1.0;
  u(static_cast<Eigen::Index>(b.index(0, OscillatorConfig::single(1, 1)))) = 2.0;
  EXPECT_DOUBLE_EQ(top_shell_weight(b, h, u), 0.8);
}

TEST(Gri, TrivialSplitHasZeroResidual) {
  const BasisEnumeration b(gen::chain(6), TruncationPolicy{2});
  const auto p = params(0.05, 0.5);
  const auto dis = sample_disorder(b.region(), p, 1, 0);
  gen::Gen g(53);
  const auto rep = verify_gri(b, p, dis, SubspaceSelector::position_split(b.region(), {0, 1, 2, 3, 4, 5}),
                              cd(0.25, 1e-3), random_pairs(g, b.size(), 10));
  EXPECT_EQ(rep.residuals.at("gre"), 0.0);
  EXPECT_EQ(rep.residuals.at("gre2"), 0.0);
}

TEST(Gri, BallSplitOnChain) {
  const BasisEnumeration b(gen::chain(8), TruncationPolicy{2});
  const auto p = params(0.05, 0.5);
  const auto dis = sample_disorder(b.region(), p, 3, 0);
  std::vector<std::size_t> ball;
  for (const auto& s : b.region().ball(Site{3}, 2)) ball.push_back(b.region().index_of(s));
  gen::Gen g(54);
  const auto rep = verify_gri(b, p, dis, SubspaceSelector::position_split(b.region(), ball), cd(0.25, 1e-3),
                              random_pairs(g, b.size(), 20));
  EXPECT_LE(rep.residuals.at("gre"), 1e-8);
  EXPECT_LE(rep.residuals.at("gre2"), 1e-8);
  EXPECT_EQ(rep.pairs_checked.at("gre"), 20);
  EXPECT_GT(rep.max_abs_green, 0.0);
}

TEST(Gri, BandSplitIncludingOffShellRows) {
  const BasisEnumeration b(gen::chain(8), TruncationPolicy{2});
  const auto p = params(0.05, cd(0.5, 0.2));
  const auto dis = sample_disorder(b.region(), p, 3, 1);
  gen::Gen g(55);
  auto pairs = random_pairs(g, b.size(), 10);
  for (int i = 0; i < 10; ++i) pairs.emplace_back(b.shell(1)[g.index(b.shell(1).size())], b.shell(0)[g.index(b.shell(0).size())]);
  const auto rep = verify_gri(b, p, dis, SubspaceSelector::band_split(0), cd(0.25, 1e-3), pairs);
  EXPECT_LE(rep.residuals.at("firstres"), 1e-8);
  EXPECT_LE(rep.residuals.at("firstres2"), 1e-8);
  EXPECT_LE(rep.residuals.at("firstresout"), 1e-8);
  EXPECT_GE(rep.pairs_checked.at("firstresout"), 10);
}

TEST(Gri, ResidualTracksSolverAccuracy) {
  const BasisEnumeration b(gen::chain(8), TruncationPolicy{2});
  const auto p = params(0.05, 0.5);
  const auto dis = sample_disorder(b.region(), p, 3, 0);
  const auto split = SubspaceSelector::position_split(b.region(), {0, 1, 2, 3});
  gen::Gen g(56);
  const auto pairs = random_pairs(g, b.size(), 20);
  const double coarse = verify_gri(b, p, dis, split, cd(0.25, 1e-3), pairs, 1e-4).residuals.at("gre");
  const double fine = verify_gri(b, p, dis, split, cd(0.25, 1e-3), pairs, 1e-6).residuals.at("gre");
  EXPECT_GT(coarse, 1e-9);
  EXPECT_NEAR(std::log10(coarse / fine), 2.0, 0.5);
}

TEST(Gri, Errors) {
  const BasisEnumeration b(gen::chain(4), TruncationPolicy{1});
  const auto p = params(0.05, 0.5);
  const auto dis = sample_disorder(b.region(), p, 3, 0);
  EXPECT_ERROR_CODE(verify_gri(b, p, dis, SubspaceSelector::band_split(0), cd(0.25, 0.0), {{0, 1}}),
                    ErrorCode::SingularShift);
  EXPECT_ERROR_CODE(verify_gri(b, p, dis, SubspaceSelector::band_in(0), cd(0.25, 0.1), {{0, 1}}),
                    ErrorCode::SelectorMismatch);
  EXPECT_ERROR_CODE(verify_gri(b, p, dis, SubspaceSelector::band_split(0), cd(0.25, 0.1), {{0, 999}}),
                    ErrorCode::SelectorMismatch);
}

namespace {

// |x, e_0> for x = 1..n-1 against |0, e_0>: d equals the lattice distance
std::vector<std::pair<std::size_t, std::size_t>> excited_chain(const BasisEnumeration& b) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto e0 = OscillatorConfig::single(0, 1);
  for (std::size_t x = 1; x < b.region().size(); ++x) out.emplace_back(b.index(x, e0), b.index(0, e0));
  return out;
}

double fitted_rate(const CtProbeResult& r) {
  std::vector<double> xs, ys;
  for (const auto& rec : r.records) {
    xs.push_back(rec.distances.d);
    ys.push_back(std::log(std::abs(rec.green)));
  }
  return -fit_line(xs, ys).slope;
}

}  // namespace

TEST(CombesThomas, Errors) {
  const BasisEnumeration b(gen::chain(4), TruncationPolicy{1});
  auto p = params(0.2, 0.5);
  const auto dis = sample_disorder(b.region(), p, 3, 0);
  EXPECT_ERROR_CODE(combes_thomas_probe(b, p, dis, SubspaceSelector::band_out(0), 0, 0.25, {}), ErrorCode::GapViolated);
  p.gamma = 0.02;
  EXPECT_ERROR_CODE(combes_thomas_probe(b, p, dis, SubspaceSelector::full(), 0, 0.25, {}), ErrorCode::SelectorMismatch);
  EXPECT_ERROR_CODE(combes_thomas_probe(b, p, dis, SubspaceSelector::band_out(0), 0, 0.25, {{0, 1}}),
                    ErrorCode::SelectorMismatch);
  auto p0 = params(0.0, 0.5);
  EXPECT_ERROR_CODE(combes_thomas_probe(b, p0, dis, SubspaceSelector::band_out(0), 0, 1.0 + dis.values[2], {}),
                    ErrorCode::GapViolated);
}

TEST(CombesThomas, ZeroHoppingHasNoOffDiagonal) {
  const BasisEnumeration b(gen::chain(6), TruncationPolicy{2});
  const auto p = params(0.0, 0.5, 0.3);
  const auto r = combes_thomas_probe(b, p, sample_disorder(b.region(), p, 1, 0), SubspaceSelector::band_out(0), 0,
                                     0.25, excited_chain(b));
  for (const auto& rec : r.records) EXPECT_EQ(rec.green, cd(0.0));
  EXPECT_TRUE(r.norm_within_gap_bound);
}

TEST(CombesThomas, DecayRateDropsWhenHoppingDoubles) {
  const BasisEnumeration b(gen::chain(10), TruncationPolicy{2});
  auto p = params(0.02, 0.5, 0.3);
  const auto dis = sample_disorder(b.region(), p, 8, 0);
  const auto pairs = excited_chain(b);
  const auto weak = combes_thomas_probe(b, p, dis, SubspaceSelector::band_out(0), 0, 0.25, pairs);
  p.gamma = 0.04;
  const auto strong = combes_thomas_probe(b, p, dis, SubspaceSelector::band_out(0), 0, 0.25, pairs);
  const double nu_weak = fitted_rate(weak), nu_strong = fitted_rate(strong);
  EXPECT_GT(nu_weak, 0.0);
  EXPECT_GT(nu_strong, 0.0);
  EXPECT_LT(nu_strong, nu_weak);
  for (const auto* r : {&weak, &strong}) {
    EXPECT_TRUE(r->norm_within_dist);
    EXPECT_TRUE(r->norm_within_gap_bound);
    EXPECT_LE(r->dist_to_spectrum, 1.0);
  }
}

TEST(CombesThomas, BlockNormsRespectFittedEnvelope) {
  const BasisEnumeration b(gen::chain(10), TruncationPolicy{2});
  const auto p = params(0.02, 0.5, 0.3);
  const auto dis = sample_disorder(b.region(), p, 8, 0);
  const auto sel = SubspaceSelector::band_out(0);
  const auto probe = combes_thomas_probe(b, p, dis, sel, 0, 0.25, excited_chain(b));
  const double nu = fitted_rate(probe);
  const auto op = assemble(b, p, dis, sel);
  const ShiftedSolver solver(op, 0.25);
  auto on_site = [&](std::size_t x) {
    std::vector<std::size_t> out;
    for (auto g : op.global_index)
      if (b.site_of(g) == x && b.total(g) == 1) out.push_back(g);
    return out;
  };
  const auto left = on_site(0);
  for (std::size_t x = 1; x < 10; ++x) {
    const auto right = on_site(x);
    double d = std::numeric_limits<double>::infinity();
    for (auto a : left)
      for (auto c : right) d = std::min(d, pair_distances(b, a, c, 0).d);
    EXPECT_LE(resolvent_block_norm(op, solver, left, right), probe.gap_bound * std::exp(-nu * d)) << "x=" << x;
  }
}

TEST(Correlator, Normalization) {
  const BasisEnumeration b(gen::chain(4), TruncationPolicy{2});
  const auto p = params(0.1, cd(0.5, 0.3));
  const auto h = assemble(b, p, sample_disorder(b.region(), p, 2, 0), SubspaceSelector::full());
  const auto spec = spectrum(h, true);
  for (std::size_t a = 0; a < b.size(); a += 7)
    EXPECT_NEAR(eigenfunction_correlator(spec, a, a, EnergyWindow::all()).value, 1.0, 1e-12);
  EXPECT_ERROR_CODE(eigenfunction_correlator(spectrum(h), 0, 0, EnergyWindow::all()), ErrorCode::ComputeFailed);
  EXPECT_ERROR_CODE(spectrum(h, true, 5), ErrorCode::DimensionTooLarge);
}

TEST(Correlator, ZeroHoppingVacuumIsKronecker) {
  const BasisEnumeration b(gen::chain(5), TruncationPolicy{1});
  const auto p = params(0.0, 0.5);
  const auto spec = spectrum(assemble(b, p, sample_disorder(b.region(), p, 3, 0), SubspaceSelector::full()), true);
  const auto window = EnergyWindow::band_window(p, 0);
  for (std::size_t x = 0; x < 5; ++x)
    for (std::size_t y = 0; y < 5; ++y) {
      const double q = eigenfunction_correlator(spec, b.index(x, {}), b.index(y, {}), window).value;
      EXPECT_NEAR(q, x == y ? 1.0 : 0.0, 1e-14);
      const auto dyn = dynamical_amplitude(spec, b.index(x, {}), b.index(y, {}), window, {0.0, 1.0, 10.0});
      if (x != y) EXPECT_LE(dyn.grid_max, 1e-14);
    }
}

TEST(Correlator, CauchySchwarzAndDynamicalEnvelope) {
  gen::Gen g(57);
  for (int t = 0; t < 5; ++t) {
    const BasisEnumeration b(gen::chain(5), TruncationPolicy{2});
    const auto p = params(g.real(0.02, 0.2), g.beta(1.0));
    const auto spec = spectrum(assemble(b, p, sample_disorder(b.region(), p, 4, t), SubspaceSelector::full()), true);
    const auto window = EnergyWindow::band_window(p, 0);
    std::vector<double> times;
    for (int i = 0; i < 32; ++i) times.push_back(0.5 * i);
    for (int q = 0; q < 20; ++q) {
      const std::size_t a = g.index(b.size()), c = g.index(b.size());
      double pa = 0, pc = 0;
      for (Eigen::Index j = 0; j < spec.values.size(); ++j)
        if (window.contains(spec.values(j))) {
          pa += std::norm(spec.vectors(static_cast<Eigen::Index>(a), j));
          pc += std::norm(spec.vectors(static_cast<Eigen::Index>(c), j));
        }
      const double qv = eigenfunction_correlator(spec, a, c, window).value;
      EXPECT_LE(qv, std::sqrt(pa * pc) + 1e-12);
      const auto dyn = dynamical_amplitude(spec, a, c, window, times);
      EXPECT_LE(dyn.grid_max, dyn.q_bound + 1e-10);
      const auto self = dynamical_amplitude(spec, a, a, window, {0.0});
      EXPECT_NEAR(self.amplitudes[0], pa, 1e-12);
    }
  }
}

TEST(Correlator, ClusterGrouping) {
  Eigen::VectorXd v(5);
  v << 0.0, 1.0, 1.0 + 1e-12, 2.0, 3.0;
  const auto cl = cluster_eigenvalues(v);
  ASSERT_EQ(cl.size(), 4u);
  EXPECT_EQ(cl[1].count, 2u);
  EXPECT_EQ(cl[2].first, 3u);
}
