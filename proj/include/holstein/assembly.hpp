#pragma once

// Assembly of H(gamma) = gamma Delta + omega N + V in the |x, m> basis, its
// compressions P_S H P_S onto subspaces, and the hopping remainders that
// couple the blocks of a split.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "holstein/errors.hpp"
#include "holstein/model.hpp"
#include "holstein/oscillator.hpp"
#include "holstein/state_space.hpp"

namespace holstein {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// Which basis states an operator is compressed to. A selector resolves to
/// disjoint blocks of basis indices; hopping between different blocks is
/// removed (block-diagonal compression).
class SubspaceSelector {
 public:
  enum class Kind { Full, Positions, BandIn, BandOut, BandSplit, DirectSum, Explicit };

  static SubspaceSelector full() { return SubspaceSelector(Kind::Full); }

  /// States with the particle on one of `sites` (site indices).
  static SubspaceSelector positions(std::vector<std::size_t> sites) {
    SubspaceSelector s(Kind::Positions);
    s.first_ = std::move(sites);
    return s;
  }
  static SubspaceSelector band_in(int k) { return band(Kind::BandIn, k); }
  static SubspaceSelector band_out(int k) { return band(Kind::BandOut, k); }
  /// In-band and out-of-band blocks of shell k, decoupled from each other.
  static SubspaceSelector band_split(int k) { return band(Kind::BandSplit, k); }

  /// Particle positions in gamma, and in v, with hopping between them removed.
  static SubspaceSelector direct_sum(std::vector<std::size_t> gamma, std::vector<std::size_t> v) {
    SubspaceSelector s(Kind::DirectSum);
    s.first_ = std::move(gamma);
    s.second_ = std::move(v);
    return s;
  }

  /// gamma (+) (region \ gamma).
  static SubspaceSelector position_split(const LatticeRegion& region, std::vector<std::size_t> gamma) {
    std::vector<char> in(region.size(), 0);
    for (auto g : gamma) {
      if (g >= region.size()) throw Error(ErrorCode::SelectorMismatch, "site index out of range");
      in[g] = 1;
    }
    std::vector<std::size_t> rest;
    for (std::size_t s = 0; s < region.size(); ++s)
      if (!in[s]) rest.push_back(s);
    return direct_sum(std::move(gamma), std::move(rest));
  }

  static SubspaceSelector explicit_states(std::vector<std::size_t> indices) {
    SubspaceSelector s(Kind::Explicit);
    s.first_ = std::move(indices);
    return s;
  }

  Kind kind() const { return kind_; }
  int band_index() const { return band_; }

  std::vector<std::vector<std::size_t>> blocks(const BasisEnumeration& basis) const {
    const std::size_t n = basis.size();
    auto states_on = [&](const std::vector<std::size_t>& sites) {
      std::vector<char> in(basis.region().size(), 0);
      for (auto s : sites) {
        if (s >= basis.region().size()) throw Error(ErrorCode::SelectorMismatch, "site index out of range");
        in[s] = 1;
      }
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < n; ++i)
        if (in[basis.site_of(i)]) out.push_back(i);
      return out;
    };
    auto by_shell = [&](bool inside) {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < n; ++i)
        if ((basis.total(i) == band_) == inside) out.push_back(i);
      return out;
    };
    std::vector<std::vector<std::size_t>> out;
    switch (kind_) {
      case Kind::Full: {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        out.push_back(std::move(all));
        break;
      }
      case Kind::Positions: out.push_back(states_on(first_)); break;
      case Kind::BandIn: out.push_back(by_shell(true)); break;
      case Kind::BandOut: out.push_back(by_shell(false)); break;
      case Kind::BandSplit:
        out.push_back(by_shell(true));
        out.push_back(by_shell(false));
        break;
      case Kind::DirectSum: {
        for (auto s : first_)
          if (std::find(second_.begin(), second_.end(), s) != second_.end())
            throw Error(ErrorCode::SelectorMismatch, "direct-sum position sets overlap");
        out.push_back(states_on(first_));
        out.push_back(states_on(second_));
        break;
      }
      case Kind::Explicit: {
        std::vector<std::size_t> idx = first_;
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        if (!idx.empty() && idx.back() >= n) throw Error(ErrorCode::SelectorMismatch, "state index out of range");
        out.push_back(std::move(idx));
        break;
      }
    }
    return out;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Full: return "full";
      case Kind::Positions: return "positions";
      case Kind::BandIn: return "band-in(" + std::to_string(band_) + ")";
      case Kind::BandOut: return "band-out(" + std::to_string(band_) + ")";
      case Kind::BandSplit: return "band-split(" + std::to_string(band_) + ")";
      case Kind::DirectSum: return "direct-sum";
      case Kind::Explicit: return "explicit";
    }
    return "?";
  }

 private:
  explicit SubspaceSelector(Kind k) : kind_(k) {}
  static SubspaceSelector band(Kind kind, int k) {
    SubspaceSelector s(kind);
    s.band_ = k;
    return s;
  }

  Kind kind_;
  int band_ = 0;
  std::vector<std::size_t> first_, second_;
};

/// Maps basis indices to the rows of a compressed operator. Local order
/// follows basis order, so a selector covering the whole basis has
/// local index == basis index.
struct BlockLayout {
  std::vector<int> block_of;                 // per basis index, -1 when not selected
  std::vector<std::ptrdiff_t> local_of;      // per basis index, -1 when not selected
  std::vector<std::size_t> global_of;        // per local index
  std::size_t block_count = 0;

  BlockLayout() = default;
  BlockLayout(const std::vector<std::vector<std::size_t>>& blocks, std::size_t basis_size)
      : block_of(basis_size, -1), local_of(basis_size, -1), block_count(blocks.size()) {
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (auto i : blocks[b]) {
        if (i >= basis_size) throw Error(ErrorCode::SelectorMismatch, "state index out of range");
        if (block_of[i] != -1) throw Error(ErrorCode::SelectorMismatch, "selector blocks overlap");
        block_of[i] = static_cast<int>(b);
      }
    for (std::size_t i = 0; i < basis_size; ++i)
      if (block_of[i] != -1) {
        local_of[i] = static_cast<std::ptrdiff_t>(global_of.size());
        global_of.push_back(i);
      }
  }

  bool covers_all() const { return global_of.size() == block_of.size(); }
  bool coupled(std::size_t i, std::size_t j) const { return block_of[i] != -1 && block_of[i] == block_of[j]; }
};

/// Hermitian sparse operator on a selected set of basis states.
struct OperatorMatrix {
  SparseMatrix matrix;
  std::vector<std::size_t> global_index;     // local -> basis index
  std::vector<std::ptrdiff_t> local_index;   // basis index -> local, -1 when absent
  double leaked_weight = 0.0;                // sum of |dropped hopping elements|^2

  std::size_t dimension() const { return global_index.size(); }

  std::optional<std::size_t> local(std::size_t global) const {
    if (global >= local_index.size() || local_index[global] < 0) return std::nullopt;
    return static_cast<std::size_t>(local_index[global]);
  }

  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix); }

  bool is_real() const {
    for (int k = 0; k < matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
        if (it.value().imag() != 0.0) return false;
    return true;
  }

  /// max_ij |H_ij - conj(H_ji)|
  double hermiticity_defect() const {
    const SparseMatrix adj = matrix.adjoint();
    const SparseMatrix diff = matrix - adj;
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
  }

  double max_abs_entry() const {
    double worst = 0.0;
    for (int k = 0; k < matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
  }
};

struct AssemblyOptions {
  // Test hook: -1 replaces gamma*Delta by -gamma*Delta.
  double hopping_sign = 1.0;
};

namespace detail {

/// Calls emit(row, col, value) for every nonzero off-diagonal element of
/// Delta inside the truncated basis, and returns the total squared weight of
/// elements whose row falls above the truncation.
template <class Emit>
double for_each_hopping(const BasisEnumeration& basis, cplx beta, Emit&& emit,
                        const std::vector<char>* columns = nullptr) {
  const auto& region = basis.region();
  const int kmax = basis.max_total();
  const int cap = basis.policy().per_site_cap.value_or(kmax);
  const oscillator::DisplacementTable plus(kmax, beta), minus(kmax, -beta);
  double leaked = 0.0;
  for (std::size_t col = 0; col < basis.size(); ++col) {
    if (columns && !(*columns)[col]) continue;
    const std::size_t y = basis.site_of(col);
    const OscillatorConfig& xi = basis.config_of(col);
    const int xi_y = xi.at(y);
    for (std::size_t x : region.neighbors(y)) {
      const int xi_x = xi.at(x);
      const int room = kmax - (xi.total() - xi_x - xi_y);
      double kept = 0.0;
      for (int a = 0; a <= std::min(room, cap); ++a) {
        for (int b = 0; b <= std::min(room - a, cap); ++b) {
          const OscillatorConfig m = xi.with(x, a).with(y, b);
          const auto c = basis.find_config(m);
          if (!c) continue;
          const cplx value = -minus(a, xi_x) * plus(b, xi_y);
          kept += std::norm(value);
          emit(x * basis.config_count() + *c, col, value);
        }
      }
      // sum over all (a, b) of |<a|D(-b)|xi_x>|^2 |<b|D(b)|xi_y>|^2 is 1 by unitarity
      leaked += std::max(0.0, 1.0 - kept);
    }
  }
  return leaked;
}

inline OperatorMatrix make_operator(const BlockLayout& layout, std::vector<Eigen::Triplet<cplx>>& triplets) {
  OperatorMatrix out;
  const auto dim = static_cast<Eigen::Index>(layout.global_of.size());
  out.matrix.resize(dim, dim);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  out.global_index = layout.global_of;
  out.local_index = layout.local_of;
  return out;
}

}  // namespace detail

/// Hopping operator Delta compressed by `selector` (gamma factored out):
/// 2D on the diagonal, -<m(x)|D(-beta)|xi(x)><m(y)|D(beta)|xi(y)> between
/// neighboring positions whose configurations agree off {x, y}.
inline OperatorMatrix assemble_hopping(const BasisEnumeration& basis, const ModelParams& params,
                                       const SubspaceSelector& selector) {
  const BlockLayout layout(selector.blocks(basis), basis.size());
  std::vector<Eigen::Triplet<cplx>> triplets;
  const double diag = 2.0 * params.dimension;
  for (std::size_t l = 0; l < layout.global_of.size(); ++l)
    triplets.emplace_back(static_cast<int>(l), static_cast<int>(l), cplx(diag, 0.0));
  std::vector<char> cols(basis.size(), 0);
  for (auto g : layout.global_of) cols[g] = 1;
  const double leaked = detail::for_each_hopping(
      basis, params.beta,
      [&](std::size_t row, std::size_t col, cplx v) {
        if (layout.coupled(row, col))
          triplets.emplace_back(static_cast<int>(layout.local_of[row]), static_cast<int>(layout.local_of[col]), v);
      },
      &cols);
  OperatorMatrix out = detail::make_operator(layout, triplets);
  out.leaked_weight = leaked;
  return out;
}

/// P_S H(gamma) P_S for the blocks of `selector`, with inter-block hopping removed.
inline OperatorMatrix assemble(const BasisEnumeration& basis, const ModelParams& params, const DisorderSample& disorder,
                               const SubspaceSelector& selector, const AssemblyOptions& options = {}) {
  if (disorder.values.size() != basis.region().size())
    throw Error(ErrorCode::SelectorMismatch, "disorder sample does not match region");
  const BlockLayout layout(selector.blocks(basis), basis.size());
  const double g = params.gamma * options.hopping_sign;
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(layout.global_of.size() * (1 + 2 * params.dimension * 3));
  for (std::size_t l = 0; l < layout.global_of.size(); ++l) {
    const std::size_t i = layout.global_of[l];
    const double e = 2.0 * params.dimension * g + params.omega * basis.total(i) + disorder.values[basis.site_of(i)];
    triplets.emplace_back(static_cast<int>(l), static_cast<int>(l), cplx(e, 0.0));
  }
  double leaked = 0.0;
  if (params.gamma != 0.0) {
    std::vector<char> cols(basis.size(), 0);
    for (auto gi : layout.global_of) cols[gi] = 1;
    leaked = detail::for_each_hopping(
        basis, params.beta,
        [&](std::size_t row, std::size_t col, cplx v) {
          if (layout.coupled(row, col))
            triplets.emplace_back(static_cast<int>(layout.local_of[row]), static_cast<int>(layout.local_of[col]),
                                  g * v);
        },
        &cols);
  }
  OperatorMatrix out = detail::make_operator(layout, triplets);
  out.leaked_weight = params.gamma * params.gamma * leaked;
  return out;
}

/// T = Delta - Delta_split for a selector whose blocks partition the basis;
/// returned on the full basis, gamma factored out.
inline OperatorMatrix hopping_remainder(const BasisEnumeration& basis, const ModelParams& params,
                                        const SubspaceSelector& split) {
  const BlockLayout layout(split.blocks(basis), basis.size());
  if (!layout.covers_all()) throw Error(ErrorCode::SelectorMismatch, "hopping remainder needs a partition of the basis");
  const BlockLayout whole(SubspaceSelector::full().blocks(basis), basis.size());
  std::vector<Eigen::Triplet<cplx>> triplets;
  detail::for_each_hopping(basis, params.beta, [&](std::size_t row, std::size_t col, cplx v) {
    if (layout.block_of[row] != layout.block_of[col])
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
  });
  return detail::make_operator(whole, triplets);
}

struct Spectrum {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // columns, when requested
  bool has_vectors = false;
};

inline constexpr std::size_t kDefaultDenseLimit = 6000;

/// Full Hermitian eigendecomposition (real-symmetric path when the matrix is real).
inline Spectrum spectrum(const OperatorMatrix& op, bool with_vectors = false,
                         std::size_t dense_limit = kDefaultDenseLimit) {
  if (op.dimension() > dense_limit)
    throw Error(ErrorCode::DimensionTooLarge,
                std::to_string(op.dimension()) + " > dense limit " + std::to_string(dense_limit));
  Spectrum out;
  out.has_vectors = with_vectors;
  const int opts = with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  if (op.dimension() == 0) return out;
  if (op.is_real()) {
    const Eigen::MatrixXd dense = Eigen::MatrixXcd(op.matrix).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense, opts);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::ComputeFailed, "eigensolver failed");
    out.values = solver.eigenvalues();
    if (with_vectors) out.vectors = solver.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.dense(), opts);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::ComputeFailed, "eigensolver failed");
    out.values = solver.eigenvalues();
    if (with_vectors) out.vectors = solver.eigenvectors();
  }
  return out;
}

}  // namespace holstein
