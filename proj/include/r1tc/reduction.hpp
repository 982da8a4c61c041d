// Homogeneous 2x2-minor system in the partial matrix entries X_ij, its
// numerical nullspace, and the strong completability test.
#pragma once

#include "r1tc/tensor_model.hpp"

#include <Eigen/SVD>

#include <map>
#include <optional>

namespace r1tc {

/// One minor equation  coeff_first * X_second + coeff_second * X_first = 0,
/// i.e. A_s X_t - A_t X_s = 0 for slice members s < t of slice k.
struct MinorConstraint {
  int k = 0;
  Pair first{0, 0};
  Pair second{0, 0};
  double coeff_first = 0.0;   // A_{first, k}
  double coeff_second = 0.0;  // -A_{second, k}
};

struct ConstraintSystem {
  std::vector<Pair> variables;  // sorted distinct (i, j)
  std::vector<MinorConstraint> rows;
  Eigen::MatrixXd matrix;  // rows.size() x variables.size()

  int column(const Pair& p) const {
    auto it = std::lower_bound(variables.begin(), variables.end(), p);
    if (it == variables.end() || *it != p) return -1;
    return static_cast<int>(it - variables.begin());
  }
};

namespace detail {

inline ConstraintSystem assemble(std::vector<Pair> vars, std::vector<MinorConstraint> rows) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  ConstraintSystem sys;
  sys.variables = std::move(vars);
  sys.rows = std::move(rows);
  sys.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sys.rows.size()),
                                     static_cast<Eigen::Index>(sys.variables.size()));
  for (std::size_t r = 0; r < sys.rows.size(); ++r) {
    const auto& row = sys.rows[r];
    sys.matrix(r, sys.column(row.second)) += row.coeff_first;
    sys.matrix(r, sys.column(row.first)) += row.coeff_second;
  }
  return sys;
}

inline Pair unordered(Pair p) {
  if (p[0] > p[1]) std::swap(p[0], p[1]);
  return p;
}

}  // namespace detail

/// All C(m_k, 2) minors per slice, slices in increasing k, pairs s < t in
/// lexicographic member order. Columns are the distinct (i, j) of the
/// observed set in lexicographic order.
inline ConstraintSystem build_minors(const PartialTensor& t) {
  std::vector<Pair> vars;
  std::vector<MinorConstraint> rows;
  for (const auto& g : slice_groups(t)) {
    for (std::size_t s = 0; s < g.members.size(); ++s) {
      vars.push_back(g.members[s]);
      for (std::size_t u = s + 1; u < g.members.size(); ++u)
        rows.push_back({g.k, g.members[s], g.members[u], g.values[s], -g.values[u]});
    }
  }
  return detail::assemble(std::move(vars), std::move(rows));
}

/// Which observed set feeds the symmetric minors: the entries as listed in
/// the input, or their full permutation closure.
enum class SymmetricSource { listed, closed };

/// Symmetric variant: variables are unordered pairs V_ij (i <= j). Minors
/// between the two orderings of one pair collapse to zero rows.
inline ConstraintSystem build_minors_symmetric(const PartialTensor& t,
                                               SymmetricSource source = SymmetricSource::listed) {
  if (!t.symmetric()) throw std::invalid_argument("build_minors_symmetric requires a symmetric tensor");
  std::vector<Pair> vars;
  std::vector<MinorConstraint> rows;
  auto groups = source == SymmetricSource::listed ? slice_groups(t.listed_entries()) : slice_groups(t);
  for (const auto& g : groups) {
    for (std::size_t s = 0; s < g.members.size(); ++s) {
      vars.push_back(detail::unordered(g.members[s]));
      for (std::size_t u = s + 1; u < g.members.size(); ++u)
        rows.push_back({g.k, detail::unordered(g.members[s]), detail::unordered(g.members[u]), g.values[s],
                        -g.values[u]});
    }
  }
  return detail::assemble(std::move(vars), std::move(rows));
}

struct Nullspace {
  Eigen::MatrixXd basis;  // columns are orthonormal
  int dim = 0;
  Eigen::VectorXd singular_values;
};

/// Numerical nullspace of the minor matrix. Rows are scaled to unit norm
/// first; singular values at or below tol * max(sigma_1, 1) count as zero.
inline Nullspace nullspace(const ConstraintSystem& sys, double tol = 1e-8) {
  const auto cols = static_cast<Eigen::Index>(sys.variables.size());
  Nullspace out;
  if (cols == 0) {
    out.basis = Eigen::MatrixXd(0, 0);
    return out;
  }
  Eigen::MatrixXd m = sys.matrix;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double nrm = m.row(r).norm();
    if (nrm > 0) m.row(r) /= nrm;
  }
  // pad to a square-or-tall matrix so the full right singular basis is available
  if (m.rows() < cols) {
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(cols, cols);
    padded.topRows(m.rows()) = m;
    m.swap(padded);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = tol * std::max(sv.size() ? sv[0] : 0.0, 1.0);
  int rank = 0;
  for (Eigen::Index q = 0; q < sv.size(); ++q)
    if (sv[q] > cut) ++rank;
  out.dim = static_cast<int>(cols) - rank;
  out.basis = svd.matrixV().rightCols(out.dim);
  out.singular_values = sv;
  return out;
}

/// X_ij = w_ij on the observed pairs, normalized so the anchor pair is 1.
struct StrongData {
  std::map<Pair, double> w;
  int nullspace_dim = 1;
};

enum class StrongCheck { strong, dimension_not_one, anchor_coordinate_zero };

struct StrongOutcome {
  StrongCheck check = StrongCheck::dimension_not_one;
  int nullspace_dim = 0;
  std::optional<StrongData> data;
};

/// Decide strong completability of the minor system. A one-dimensional
/// nullspace whose anchor coordinate is numerically zero is reported
/// separately because the normalization X_anchor = 1 is then impossible.
inline StrongOutcome strong_data(const PartialTensor& t, double tol = 1e-8) {
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) throw std::invalid_argument("strong_data requires a nonzero anchor");
  auto sys = build_minors(t);
  auto ns = nullspace(sys, tol);
  StrongOutcome out;
  out.nullspace_dim = ns.dim;
  if (ns.dim != 1) return out;
  Eigen::VectorXd span = ns.basis.col(0);
  int col = sys.column({anchor.index[0], anchor.index[1]});
  double pivot = span[col];
  if (std::abs(pivot) <= tol * span.cwiseAbs().maxCoeff()) {
    out.check = StrongCheck::anchor_coordinate_zero;
    return out;
  }
  StrongData data;
  data.nullspace_dim = 1;
  for (std::size_t q = 0; q < sys.variables.size(); ++q) data.w[sys.variables[q]] = span[q] / pivot;
  data.w[{anchor.index[0], anchor.index[1]}] = 1.0;
  out.check = StrongCheck::strong;
  out.data = std::move(data);
  return out;
}

}  // namespace r1tc
