#pragma once

// Green's functions of (compressed) Hamiltonians, residual checks of the
// geometric resolvent identities, Combes-Thomas gap probes and spectral
// correlators.

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "holstein/assembly.hpp"
#include "holstein/errors.hpp"
#include "holstein/model.hpp"
#include "holstein/state_space.hpp"

namespace holstein {

/// One factorization of (H - z), shared by all solves against it.
/// Dense LU up to the dense limit, sparse LU above.
class ShiftedSolver {
 public:
  ShiftedSolver(const OperatorMatrix& op, cplx z, std::size_t dense_limit = kDefaultDenseLimit)
      : z_(z), dim_(op.dimension()) {
    SparseMatrix eye(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    eye.setIdentity();
    shifted_ = op.matrix - z * eye;
    if (dim_ <= dense_limit) {
      dense_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXcd>>(Eigen::MatrixXcd(shifted_));
    } else {
      sparse_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
      sparse_->compute(shifted_);
      if (sparse_->info() != Eigen::Success) throw Error(ErrorCode::SingularShift, "sparse factorization failed");
    }
  }

  cplx z() const { return z_; }
  std::size_t dimension() const { return dim_; }

  /// u with (H - z) u = rhs; refined until the residual is <= 1e-10 ||rhs||.
  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const {
    Eigen::VectorXcd u = raw_solve(rhs);
    const double target = kResidualTolerance * rhs.norm();
    for (int pass = 0;; ++pass) {
      if (!u.allFinite()) throw Error(ErrorCode::SingularShift, "non-finite resolvent column");
      // ||(H - z)^{-1}|| = 1 / dist(z, spectrum) for Hermitian H
      if (z_.imag() == 0.0 && u.norm() > kSingularNorm * std::max(rhs.norm(), 1e-300))
        throw Error(ErrorCode::SingularShift, "real shift within 1e-12 of the spectrum");
      const Eigen::VectorXcd r = rhs - shifted_ * u;
      if (r.norm() <= target) break;
      if (pass == 2) throw Error(ErrorCode::SolveNotConverged, "residual " + std::to_string(r.norm()));
      u += raw_solve(r);
    }
    return u;
  }

  /// Column `local` of (H - z)^{-1}.
  Eigen::VectorXcd column(std::size_t local) const {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim_));
    e(static_cast<Eigen::Index>(local)) = 1.0;
    return solve(e);
  }

  const SparseMatrix& shifted() const { return shifted_; }

  static constexpr double kResidualTolerance = 1e-10;
  static constexpr double kSingularNorm = 1e12;

 private:
  Eigen::VectorXcd raw_solve(const Eigen::VectorXcd& rhs) const {
    if (dense_) return dense_->solve(rhs);
    return sparse_->solve(rhs);
  }

  cplx z_;
  std::size_t dim_;
  SparseMatrix shifted_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> dense_;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix>> sparse_;
};

struct GreenQuery {
  std::size_t row = 0;  // basis index
  std::size_t col = 0;  // basis index
  cplx z;
};

/// <row|(H_S - z)^{-1}|col>; zero when either state lies outside S.
inline cplx greens_element(const OperatorMatrix& op, const GreenQuery& q) {
  const auto r = op.local(q.row), c = op.local(q.col);
  if (!r || !c) return {0.0, 0.0};
  ShiftedSolver solver(op, q.z);
  return solver.column(*c)(static_cast<Eigen::Index>(*r));
}

/// Fraction of |u|^2 carried by states in the top truncation shell.
inline double top_shell_weight(const BasisEnumeration& basis, const OperatorMatrix& op, const Eigen::VectorXcd& u) {
  const double total = u.squaredNorm();
  if (total == 0.0) return 0.0;
  double top = 0.0;
  for (std::size_t l = 0; l < op.dimension(); ++l)
    if (basis.total(op.global_index[l]) == basis.max_total()) top += std::norm(u(static_cast<Eigen::Index>(l)));
  return top / total;
}

inline constexpr double kTopShellFlagThreshold = 1e-6;

// ---------------------------------------------------------------------------
// Geometric resolvent identities.

struct GriReport {
  std::map<std::string, double> residuals;  // identity -> max |lhs - rhs|
  std::map<std::string, int> pairs_checked;
  double max_abs_green = 0.0;
};

/// Evaluates both sides of the resolvent identities for a split of the
/// basis and reports the largest discrepancy.
///
/// A position split (Gamma (+) V) checks gre and gre2; a band split checks
/// firstres, firstres2 and, on pairs with the row off-shell and the column
/// on-shell, firstresout. `solve_perturbation` multiplies every solved vector
/// entrywise by (1 + eta * noise), noise in [-1, 1]; used to confirm that
/// residuals track solver accuracy.
inline GriReport verify_gri(const BasisEnumeration& basis, const ModelParams& params, const DisorderSample& disorder,
                            const SubspaceSelector& split, cplx z,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                            double solve_perturbation = 0.0) {
  if (z.imag() == 0.0) throw Error(ErrorCode::SingularShift, "resolvent identities are checked off the real axis");
  const bool band = split.kind() == SubspaceSelector::Kind::BandSplit;
  const OperatorMatrix full = assemble(basis, params, disorder, SubspaceSelector::full());
  const OperatorMatrix parted = assemble(basis, params, disorder, split);
  if (parted.dimension() != basis.size()) throw Error(ErrorCode::SelectorMismatch, "split must partition the basis");
  const OperatorMatrix remainder = hopping_remainder(basis, params, split);
  const ShiftedSolver solve_full(full, z), solve_split(parted, z);

  std::uint64_t noise_counter = 0;
  auto perturb = [&](Eigen::VectorXcd v) {
    if (solve_perturbation == 0.0) return v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double u = static_cast<double>(mix64(++noise_counter) >> 11) * 0x1.0p-53;
      v(i) *= 1.0 + solve_perturbation * (2.0 * u - 1.0);
    }
    return v;
  };

  std::map<std::size_t, Eigen::VectorXcd> col_full, col_split;
  auto column_full = [&](std::size_t b) -> const Eigen::VectorXcd& {
    auto it = col_full.find(b);
    if (it == col_full.end()) it = col_full.emplace(b, perturb(solve_full.column(b))).first;
    return it->second;
  };
  auto column_split = [&](std::size_t b) -> const Eigen::VectorXcd& {
    auto it = col_split.find(b);
    if (it == col_split.end()) it = col_split.emplace(b, perturb(solve_split.column(b))).first;
    return it->second;
  };

  const std::string first = band ? "firstres" : "gre";
  const std::string second = band ? "firstres2" : "gre2";
  GriReport report;
  report.residuals[first] = 0.0;
  report.residuals[second] = 0.0;
  report.pairs_checked[first] = 0;
  report.pairs_checked[second] = 0;

  const double g = params.gamma;
  for (const auto& [a, b] : pairs) {
    if (a >= basis.size() || b >= basis.size()) throw Error(ErrorCode::SelectorMismatch, "probe pair out of range");
    const auto ai = static_cast<Eigen::Index>(a);
    const Eigen::VectorXcd& gb = column_full(b);
    const Eigen::VectorXcd& sb = column_split(b);
    const cplx lhs = gb(ai);
    report.max_abs_green = std::max(report.max_abs_green, std::abs(lhs));

    const Eigen::VectorXcd v1 = perturb(solve_split.solve(remainder.matrix * gb));
    const cplx rhs1 = sb(ai) - g * v1(ai);
    report.residuals[first] = std::max(report.residuals[first], std::abs(lhs - rhs1));
    ++report.pairs_checked[first];

    const Eigen::VectorXcd v2 = perturb(solve_full.solve(remainder.matrix * sb));
    const cplx rhs2 = sb(ai) - g * v2(ai);
    report.residuals[second] = std::max(report.residuals[second], std::abs(lhs - rhs2));
    ++report.pairs_checked[second];
  }

  if (band) {
    const int k = split.band_index();
    std::vector<std::pair<std::size_t, std::size_t>> cross;
    for (const auto& p : pairs)
      if (basis.total(p.first) != k && basis.total(p.second) == k) cross.push_back(p);
    report.residuals["firstresout"] = 0.0;
    report.pairs_checked["firstresout"] = static_cast<int>(cross.size());
    if (!cross.empty()) {
      const OperatorMatrix out_block = assemble(basis, params, disorder, SubspaceSelector::band_out(k));
      const ShiftedSolver solve_out(out_block, z);
      for (const auto& [a, b] : cross) {
        const Eigen::VectorXcd& gb = column_full(b);
        const Eigen::VectorXcd w = remainder.matrix * gb;
        Eigen::VectorXcd w_out(static_cast<Eigen::Index>(out_block.dimension()));
        for (std::size_t l = 0; l < out_block.dimension(); ++l)
          w_out(static_cast<Eigen::Index>(l)) = w(static_cast<Eigen::Index>(out_block.global_index[l]));
        const Eigen::VectorXcd v = perturb(solve_out.solve(w_out));
        const cplx rhs = -g * v(static_cast<Eigen::Index>(*out_block.local(a)));
        const cplx lhs = gb(static_cast<Eigen::Index>(a));
        report.residuals["firstresout"] = std::max(report.residuals["firstresout"], std::abs(lhs - rhs));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Combes-Thomas probes.

/// Smallest singular value of (H - z), from an SVD of the dense shifted matrix.
inline double smallest_singular_value(const OperatorMatrix& op, cplx z) {
  Eigen::MatrixXcd m = op.dense();
  m.diagonal().array() -= z;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().minCoeff();
}

/// ||P_rows (H - z)^{-1} P_cols|| for sets of basis indices inside the operator.
inline double resolvent_block_norm(const OperatorMatrix& op, const ShiftedSolver& solver,
                                   const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXcd block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto c = op.local(cols[j]);
    if (!c) throw Error(ErrorCode::SelectorMismatch, "block column outside the operator");
    const Eigen::VectorXcd u = solver.column(*c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = op.local(rows[i]);
      if (!r) throw Error(ErrorCode::SelectorMismatch, "block row outside the operator");
      block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u(static_cast<Eigen::Index>(*r));
    }
  }
  if (block.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
  return svd.singularValues()(0);
}

struct CtRecord {
  std::size_t a = 0, b = 0;
  PairDistances distances;
  cplx green;
};

struct CtProbeResult {
  double gap = 0.0;                // delta = omega - V_+ - 4 D gamma
  double gap_bound = 0.0;          // 2 / delta
  double dist_to_spectrum = 0.0;   // exact, from the restricted spectrum
  double resolvent_norm = 0.0;     // 1 / sigma_min(H_S - z), from an SVD
  bool norm_within_dist = false;   // resolvent_norm <= 1/dist (1 + 1e-9)
  bool norm_within_gap_bound = false;
  std::vector<CtRecord> records;
};

/// Resolvent of H_S at an energy inside band k, for S excluding shell k.
inline CtProbeResult combes_thomas_probe(const BasisEnumeration& basis, const ModelParams& params,
                                         const DisorderSample& disorder, const SubspaceSelector& selector, int k,
                                         cplx z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  CtProbeResult out;
  out.gap = params.gap();
  if (out.gap <= 0.0) throw Error(ErrorCode::GapViolated, "delta = " + std::to_string(out.gap) + " <= 0");
  out.gap_bound = 2.0 / out.gap;
  const OperatorMatrix op = assemble(basis, params, disorder, selector);
  for (auto g : op.global_index)
    if (basis.total(g) == k) throw Error(ErrorCode::SelectorMismatch, "selector must exclude shell " + std::to_string(k));
  const Spectrum spec = spectrum(op);
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) dist = std::min(dist, std::abs(spec.values(i) - z));
  if (dist < 1e-9) throw Error(ErrorCode::GapViolated, "z within 1e-9 of the restricted spectrum");
  out.dist_to_spectrum = dist;
  out.resolvent_norm = 1.0 / smallest_singular_value(op, z);
  out.norm_within_dist = out.resolvent_norm <= (1.0 / dist) * (1.0 + 1e-9);
  out.norm_within_gap_bound = out.resolvent_norm <= out.gap_bound;

  const ShiftedSolver solver(op, z);
  std::map<std::size_t, Eigen::VectorXcd> columns;
  for (const auto& [a, b] : pairs) {
    const auto la = op.local(a), lb = op.local(b);
    if (!la || !lb) throw Error(ErrorCode::SelectorMismatch, "probe pair outside the selected subspace");
    auto it = columns.find(b);
    if (it == columns.end()) it = columns.emplace(b, solver.column(*lb)).first;
    out.records.push_back({a, b, pair_distances(basis, a, b, k), it->second(static_cast<Eigen::Index>(*la))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral correlators.

struct EnergyWindow {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool upper_inclusive = true;

  bool contains(double e) const { return e >= lower && (upper_inclusive ? e <= upper : e < upper); }

  static EnergyWindow all() { return {}; }
  /// J_k = [0, omega k + V_+ + 4 D gamma].
  static EnergyWindow band_window(const ModelParams& params, int k) { return {0.0, params.band_upper(k), true}; }
  /// [0, cut)
  static EnergyWindow below(double cut) { return {0.0, cut, false}; }
};

struct SpectralCluster {
  double energy = 0.0;  // mean of the grouped eigenvalues
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Groups ascending eigenvalues whose consecutive gaps are <= rel_tol * max|lambda|.
inline std::vector<SpectralCluster> cluster_eigenvalues(const Eigen::VectorXd& values, double rel_tol = 1e-8) {
  std::vector<SpectralCluster> out;
  if (values.size() == 0) return out;
  const double tol = rel_tol * std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  std::size_t start = 0;
  const auto n = static_cast<std::size_t>(values.size());
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || values(static_cast<Eigen::Index>(i)) - values(static_cast<Eigen::Index>(i - 1)) > tol) {
      double sum = 0.0;
      for (std::size_t j = start; j < i; ++j) sum += values(static_cast<Eigen::Index>(j));
      out.push_back({sum / static_cast<double>(i - start), start, i - start});
      start = i;
    }
  }
  return out;
}

struct CorrelatorResult {
  double value = 0.0;
  std::vector<std::pair<double, double>> contributions;  // (cluster energy, |<a|P_E|b>|)
  std::size_t clusters_used = 0;
  std::size_t degenerate_clusters = 0;
  double cluster_tolerance = 0.0;
};

inline void require_vectors(const Spectrum& spec) {
  if (!spec.has_vectors) throw Error(ErrorCode::ComputeFailed, "eigenvectors required");
}

/// Q(a; b; window) = sum over eigenvalue clusters in the window of |<a|P_E|b>|.
/// `a`, `b` are local indices of the diagonalized operator.
inline CorrelatorResult eigenfunction_correlator(const Spectrum& spec, std::size_t a, std::size_t b,
                                                 const EnergyWindow& window, double rel_tol = 1e-8) {
  require_vectors(spec);
  CorrelatorResult out;
  out.cluster_tolerance = rel_tol;
  const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
  for (const auto& cl : cluster_eigenvalues(spec.values, rel_tol)) {
    if (!window.contains(cl.energy)) continue;
    cplx proj = 0.0;
    for (std::size_t j = cl.first; j < cl.first + cl.count; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      proj += spec.vectors(ai, ji) * std::conj(spec.vectors(bi, ji));
    }
    const double mag = std::abs(proj);
    out.contributions.emplace_back(cl.energy, mag);
    out.value += mag;
    ++out.clusters_used;
    if (cl.count > 1) ++out.degenerate_clusters;
  }
  return out;
}

struct DynamicalResult {
  double grid_max = 0.0;  // max over sampled t of |<a|exp(-itH) P_window|b>|
  double q_bound = 0.0;   // Q(a; b; window)
  std::vector<double> amplitudes;
};

/// Time-evolved spectral amplitude on a time grid, with the correlator envelope.
inline DynamicalResult dynamical_amplitude(const Spectrum& spec, std::size_t a, std::size_t b,
                                           const EnergyWindow& window, const std::vector<double>& times) {
  require_vectors(spec);
  DynamicalResult out;
  out.q_bound = eigenfunction_correlator(spec, a, b, window).value;
  const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
  std::vector<std::pair<double, cplx>> weights;
  for (Eigen::Index j = 0; j < spec.values.size(); ++j)
    if (window.contains(spec.values(j))) weights.emplace_back(spec.values(j), spec.vectors(ai, j) * std::conj(spec.vectors(bi, j)));
  out.amplitudes.reserve(times.size());
  for (double t : times) {
    cplx amp = 0.0;
    for (const auto& [e, w] : weights) amp += std::polar(1.0, -t * e) * w;
    out.amplitudes.push_back(std::abs(amp));
    out.grid_max = std::max(out.grid_max, std::abs(amp));
  }
  return out;
}

}  // namespace holstein
