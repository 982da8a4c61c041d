// Dense semidefinite programming in linear-matrix-inequality form:
//
//     minimize    c' y
//     subject to  C_b + sum_i y_i A_{b,i}  is PSD   for every block b
//                 e_r' y = d_r                      for every equality row r
//
// Equalities are eliminated up front by sparse Gaussian elimination
// (y = y0 + N x). The remaining free-variable problem is solved on the
// homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector, so infeasibility surfaces as a certificate rather
// than a stalled iteration.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace r1tc::sdp {

/// Entry of a sparse symmetric matrix, stored once with row <= col.
/// Off-diagonal entries stand for both (row, col) and (col, row).
struct SymEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct LmiBlock {
  int size = 0;
  Eigen::MatrixXd constant;
  /// One sparse symmetric coefficient matrix per problem variable.
  std::vector<std::vector<SymEntry>> coefficients;

  LmiBlock() = default;
  LmiBlock(int n, int num_vars)
      : size(n), constant(Eigen::MatrixXd::Zero(n, n)), coefficients(static_cast<std::size_t>(num_vars)) {}

  void add(int var, int r, int c, double v) {
    if (r > c) std::swap(r, c);
    coefficients.at(static_cast<std::size_t>(var)).push_back({r, c, v});
  }
};

struct EqualityRow {
  std::vector<std::pair<int, double>> coeffs;
  double rhs = 0.0;
};

struct SdpProblem {
  int num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<LmiBlock> blocks;
  std::vector<EqualityRow> equalities;

  /// Throws std::invalid_argument on inconsistent dimensions or asymmetric data.
  void validate() const {
    if (num_vars < 0) throw std::invalid_argument("negative variable count");
    if (num_vars == 0 && blocks.empty()) throw std::invalid_argument("empty SDP: no variables and no blocks");
    if (objective.size() != num_vars) throw std::invalid_argument("objective length differs from variable count");
    for (const auto& b : blocks) {
      if (b.size < 0 || b.constant.rows() != b.size || b.constant.cols() != b.size)
        throw std::invalid_argument("block constant has wrong shape");
      if ((b.constant - b.constant.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + b.constant.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("block constant is not symmetric");
      if (static_cast<int>(b.coefficients.size()) != num_vars)
        throw std::invalid_argument("block needs one coefficient matrix per variable");
      for (const auto& coeff : b.coefficients)
        for (const auto& e : coeff)
          if (e.row < 0 || e.col < 0 || e.row >= b.size || e.col >= b.size)
            throw std::invalid_argument("coefficient entry outside block");
    }
    for (const auto& row : equalities)
      for (const auto& [i, v] : row.coeffs)
        if (i < 0 || i >= num_vars) throw std::invalid_argument("equality refers to unknown variable");
  }
};

enum class SdpStatus { optimal, primal_infeasible, dual_infeasible_or_unbounded, max_iterations };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::primal_infeasible: return "primal_infeasible";
    case SdpStatus::dual_infeasible_or_unbounded: return "dual_infeasible_or_unbounded";
    case SdpStatus::max_iterations: return "max_iterations";
  }
  return "?";
}

struct KktResiduals {
  double primal = std::numeric_limits<double>::infinity();  // LMI residual, relative
  double dual = std::numeric_limits<double>::infinity();    // stationarity residual, relative
  double gap = std::numeric_limits<double>::infinity();     // relative duality gap
  double min_eigenvalue = -std::numeric_limits<double>::infinity();
  double equality = std::numeric_limits<double>::infinity();  // max |e'y - d|
  double certificate = std::numeric_limits<double>::infinity();  // infeasibility certificate quality
  int iterations = 0;
};

struct SdpSolution {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> block_values;  // C_b + sum y_i A_{b,i}
  std::vector<Eigen::MatrixXd> dual_blocks;
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  SdpStatus status = SdpStatus::max_iterations;
  KktResiduals kkt;
  std::string diagnostics;
};

struct SdpOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 200;
};

/// Dense block value C + sum_i y_i A_i.
inline Eigen::MatrixXd block_value(const LmiBlock& b, const Eigen::VectorXd& y) {
  Eigen::MatrixXd m = b.constant;
  for (std::size_t i = 0; i < b.coefficients.size(); ++i) {
    if (y[static_cast<Eigen::Index>(i)] == 0.0) continue;
    for (const auto& e : b.coefficients[i]) {
      m(e.row, e.col) += y[static_cast<Eigen::Index>(i)] * e.value;
      if (e.row != e.col) m(e.col, e.row) += y[static_cast<Eigen::Index>(i)] * e.value;
    }
  }
  return m;
}

/// Plain-text dump: sizes, objective, each block's constant and coefficient
/// matrices row-major, then dense equality rows followed by their right-hand side.
inline void write_problem_text(const SdpProblem& p, std::ostream& os) {
  os.precision(17);
  os << "num_vars " << p.num_vars << "\nnum_blocks " << p.blocks.size() << "\nblock_sizes";
  for (const auto& b : p.blocks) os << ' ' << b.size;
  os << "\nnum_equalities " << p.equalities.size() << "\nobjective";
  for (Eigen::Index i = 0; i < p.objective.size(); ++i) os << ' ' << p.objective[i];
  os << '\n';
  auto dump = [&os](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
      os << '\n';
    }
  };
  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const auto& b = p.blocks[bi];
    os << "block " << bi << " constant\n";
    dump(b.constant);
    for (int i = 0; i < p.num_vars; ++i) {
      os << "block " << bi << " var " << i << '\n';
      LmiBlock only(b.size, 0);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b.size, b.size);
      for (const auto& e : b.coefficients[static_cast<std::size_t>(i)]) {
        m(e.row, e.col) += e.value;
        if (e.row != e.col) m(e.col, e.row) += e.value;
      }
      dump(m);
    }
  }
  os << "equalities\n";
  for (const auto& row : p.equalities) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p.num_vars);
    for (const auto& [i, v] : row.coeffs) e[i] += v;
    for (int i = 0; i < p.num_vars; ++i) os << e[i] << ' ';
    os << row.rhs << '\n';
  }
}

namespace detail {

/// y = y0 + N x, with N stored per original variable as (reduced index, coefficient).
struct AffineMap {
  Eigen::VectorXd y0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int reduced_vars = 0;
  bool consistent = true;
  std::string message;
};

/// Sparse elimination of the equality rows. Each row is rewritten in the
/// still-free variables; its largest coefficient picks the pivot, which is
/// then substituted into every earlier expression.
inline AffineMap eliminate_equalities(const SdpProblem& p) {
  const int m = p.num_vars;
  struct Expr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;
  };
  std::vector<char> eliminated(static_cast<std::size_t>(m), 0);
  std::vector<Expr> expr(static_cast<std::size_t>(m));
  std::vector<std::vector<int>> users(static_cast<std::size_t>(m));  // free var -> eliminated vars using it

  AffineMap out;
  std::unordered_map<int, double> acc;
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    const auto& row = p.equalities[r];
    acc.clear();
    double constant = 0.0, scale = std::abs(row.rhs);
    for (const auto& [i, a] : row.coeffs) {
      if (a == 0.0) continue;
      if (!eliminated[i]) {
        acc[i] += a;
        scale = std::max(scale, std::abs(a));
      } else {
        const auto& ex = expr[i];
        constant += a * ex.constant;
        scale = std::max(scale, std::abs(a * ex.constant));
        for (const auto& [j, cj] : ex.terms) {
          acc[j] += a * cj;
          scale = std::max(scale, std::abs(a * cj));
        }
      }
    }
    double rhs = row.rhs - constant;
    int pivot = -1;
    double best = 0.0;
    std::vector<std::pair<int, double>> terms;
    for (const auto& [j, a] : acc) {
      if (std::abs(a) <= 1e-11 * scale) continue;
      terms.emplace_back(j, a);
      if (std::abs(a) > best || (std::abs(a) == best && j > pivot)) {
        best = std::abs(a);
        pivot = j;
      }
    }
    if (pivot < 0) {
      if (std::abs(rhs) > 1e-9 * std::max(1.0, scale)) {
        out.consistent = false;
        out.message = "equality row " + std::to_string(r) + " is inconsistent with earlier rows";
        return out;
      }
      continue;
    }
    Expr ep;
    double ap = 0.0;
    for (const auto& [j, a] : terms)
      if (j == pivot) ap = a;
    ep.constant = rhs / ap;
    for (const auto& [j, a] : terms)
      if (j != pivot) ep.terms.emplace_back(j, -a / ap);
    // substitute the pivot into existing expressions
    for (int u : users[pivot]) {
      auto& eu = expr[u];
      double cp = 0.0;
      std::vector<std::pair<int, double>> kept;
      kept.reserve(eu.terms.size() + ep.terms.size());
      for (const auto& t : eu.terms) {
        if (t.first == pivot)
          cp += t.second;
        else
          kept.push_back(t);
      }
      if (cp == 0.0) continue;
      eu.constant += cp * ep.constant;
      for (const auto& [j, a] : ep.terms) {
        bool merged = false;
        for (auto& k : kept)
          if (k.first == j) {
            k.second += cp * a;
            merged = true;
            break;
          }
        if (!merged) {
          kept.emplace_back(j, cp * a);
          users[j].push_back(u);
        }
      }
      eu.terms = std::move(kept);
    }
    users[pivot].clear();
    for (const auto& [j, a] : ep.terms) users[j].push_back(pivot);
    expr[pivot] = std::move(ep);
    eliminated[pivot] = 1;
  }

  std::vector<int> reduced_index(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i)
    if (!eliminated[i]) reduced_index[i] = out.reduced_vars++;
  out.y0 = Eigen::VectorXd::Zero(m);
  out.rows.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (!eliminated[i]) {
      out.rows[i].emplace_back(reduced_index[i], 1.0);
      continue;
    }
    out.y0[i] = expr[i].constant;
    for (const auto& [j, a] : expr[i].terms)
      if (a != 0.0) out.rows[i].emplace_back(reduced_index[j], a);
  }
  return out;
}

/// Entry of a reduced coefficient matrix with the weight used in the normal
/// matrix: value * sqrt(2) for off-diagonal, value / sqrt(2) for diagonal.
struct WEntry {
  int p = 0, q = 0;
  double value = 0.0;
  double w = 0.0;
};

struct ReducedBlock {
  int size = 0;
  Eigen::MatrixXd h;
  std::vector<std::vector<WEntry>> coeff;  // per reduced variable
};

struct Reduced {
  int m = 0;
  Eigen::VectorXd q;
  double q0 = 0.0;
  std::vector<ReducedBlock> blocks;
  std::vector<int> kept;  // reduced variable -> column in the affine map
};

inline Eigen::MatrixXd apply_F(const ReducedBlock& b, const Eigen::VectorXd& x) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.size, b.size);
  for (std::size_t j = 0; j < b.coeff.size(); ++j) {
    double xj = x[static_cast<Eigen::Index>(j)];
    if (xj == 0.0) continue;
    for (const auto& e : b.coeff[j]) {
      out(e.p, e.q) += xj * e.value;
      if (e.p != e.q) out(e.q, e.p) += xj * e.value;
    }
  }
  return out;
}

inline void add_adjoint(const ReducedBlock& b, const Eigen::MatrixXd& z, Eigen::VectorXd& out) {
  for (std::size_t j = 0; j < b.coeff.size(); ++j) {
    double s = 0.0;
    for (const auto& e : b.coeff[j]) s += e.value * (e.p == e.q ? z(e.p, e.p) : z(e.p, e.q) + z(e.q, e.p));
    out[static_cast<Eigen::Index>(j)] += s;
  }
}

/// Normal matrix H_ij = sum_b trace(F_bi R_b F_bj R_b).
inline Eigen::MatrixXd normal_matrix(const Reduced& red, const std::vector<Eigen::MatrixXd>& R) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(red.m, red.m);
  for (std::size_t bi = 0; bi < red.blocks.size(); ++bi) {
    const auto& blk = red.blocks[bi];
    const Eigen::MatrixXd& Rb = R[bi];
    for (int i = 0; i < red.m; ++i) {
      const auto& ei = blk.coeff[static_cast<std::size_t>(i)];
      if (ei.empty()) continue;
      for (int j = i; j < red.m; ++j) {
        const auto& ej = blk.coeff[static_cast<std::size_t>(j)];
        if (ej.empty()) continue;
        double s = 0.0;
        for (const auto& e : ei) {
          double inner = 0.0;
          for (const auto& f : ej)
            inner += f.w * (Rb(e.p, f.p) * Rb(e.q, f.q) + Rb(e.p, f.q) * Rb(e.q, f.p));
          s += e.w * inner;
        }
        H(i, j) += s;
      }
    }
  }
  H.triangularView<Eigen::StrictlyLower>() = H.transpose().triangularView<Eigen::StrictlyLower>();
  return H;
}

inline double min_eig(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

/// Largest step alpha with lambda + alpha * d PSD (lambda diagonal positive).
inline double max_step(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& d) {
  Eigen::VectorXd is = lambda.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd scaled = is.asDiagonal() * d * is.asDiagonal();
  double e = min_eig(0.5 * (scaled + scaled.transpose()));
  if (e >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / e;
}

struct Scaling {
  Eigen::MatrixXd r;     // W^{-T} s = r^{-1} s r^{-T} = diag(lambda)
  Eigen::MatrixXd rinv;  // r^{-1}
  Eigen::MatrixXd R;     // (r r')^{-1}
  Eigen::VectorXd lambda;
};

/// Any factor L with m = L L'. Cholesky first; an eigen-decomposition
/// square root covers matrices too close to singular for Cholesky.
inline bool psd_factor(const Eigen::MatrixXd& m, Eigen::MatrixXd& L) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
    L = llt.matrixL();
    return true;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) return false;
  L = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
  return true;
}

inline bool nt_scaling(const Eigen::MatrixXd& s, const Eigen::MatrixXd& z, Scaling& out) {
  Eigen::MatrixXd Ls, Lz;
  if (!psd_factor(s, Ls) || !psd_factor(z, Lz)) return false;
  Eigen::MatrixXd prod = Lz.transpose() * Ls;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(prod, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if (out.lambda.size() && out.lambda.minCoeff() <= 0.0) return false;
  Eigen::VectorXd isq = out.lambda.cwiseSqrt().cwiseInverse();
  out.r = Ls * svd.matrixV() * isq.asDiagonal();
  Eigen::MatrixXd rti = Lz * svd.matrixU() * isq.asDiagonal();
  out.rinv = rti.transpose();
  out.R = rti * rti.transpose();
  return true;
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// Solve the SDP. Dimension errors throw; numerical breakdown ends with
/// status max_iterations and a diagnostic message.
inline SdpSolution solve(const SdpProblem& prob, const SdpOptions& opt = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  prob.validate();
  SdpSolution sol;

  auto finish = [&](const VectorXd& y) {
    sol.y = y;
    sol.block_values.clear();
    double me = std::numeric_limits<double>::infinity();
    for (const auto& b : prob.blocks) {
      sol.block_values.push_back(block_value(b, y));
      me = std::min(me, detail::min_eig(sol.block_values.back()));
    }
    sol.kkt.min_eigenvalue = me;
    double eq = 0.0;
    for (const auto& row : prob.equalities) {
      double s = -row.rhs;
      for (const auto& [i, v] : row.coeffs) s += v * y[i];
      eq = std::max(eq, std::abs(s));
    }
    sol.kkt.equality = eq;
    sol.primal_obj = prob.objective.dot(y);
    return sol;
  };

  auto aff = detail::eliminate_equalities(prob);
  if (!aff.consistent) {
    sol.status = SdpStatus::primal_infeasible;
    sol.diagnostics = aff.message;
    sol.kkt.certificate = 0.0;
    VectorXd y = VectorXd::Zero(prob.num_vars);
    finish(y);
    sol.primal_obj = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }

  // Reduced problem: minimize q'x + q0  s.t.  h_b + F_b(x) PSD.
  detail::Reduced red;
  const int mr_all = aff.reduced_vars;
  VectorXd q_all = VectorXd::Zero(mr_all);
  for (int i = 0; i < prob.num_vars; ++i)
    for (const auto& [j, a] : aff.rows[i]) q_all[j] += a * prob.objective[i];
  red.q0 = prob.objective.dot(aff.y0);

  std::vector<std::vector<std::vector<detail::WEntry>>> coeff_all(prob.blocks.size());
  std::vector<char> used(static_cast<std::size_t>(mr_all), 0);
  for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
    const auto& b = prob.blocks[bi];
    std::vector<std::unordered_map<long long, double>> acc(static_cast<std::size_t>(mr_all));
    for (int i = 0; i < prob.num_vars; ++i) {
      const auto& entries = b.coefficients[static_cast<std::size_t>(i)];
      if (entries.empty()) continue;
      for (const auto& [j, a] : aff.rows[i])
        for (const auto& e : entries)
          acc[j][static_cast<long long>(e.row) * b.size + e.col] += a * e.value;
    }
    auto& per_var = coeff_all[bi];
    per_var.resize(static_cast<std::size_t>(mr_all));
    for (int j = 0; j < mr_all; ++j) {
      for (const auto& [key, v] : acc[j]) {
        if (v == 0.0) continue;
        int p = static_cast<int>(key / b.size), q = static_cast<int>(key % b.size);
        double w = p == q ? v / std::sqrt(2.0) : v * std::sqrt(2.0);
        per_var[j].push_back({p, q, v, w});
      }
      std::sort(per_var[j].begin(), per_var[j].end(),
                [](const auto& x, const auto& y) { return std::pair(x.p, x.q) < std::pair(y.p, y.q); });
      if (!per_var[j].empty()) used[j] = 1;
    }
  }
  double qscale = mr_all > 0 ? std::max(1.0, q_all.cwiseAbs().maxCoeff()) : 1.0;
  for (int j = 0; j < mr_all; ++j) {
    if (used[j]) {
      red.kept.push_back(j);
    } else if (std::abs(q_all[j]) > 1e-12 * qscale) {
      sol.status = SdpStatus::dual_infeasible_or_unbounded;
      sol.diagnostics = "a free direction does not enter any block but changes the objective";
      return finish(aff.y0);
    }
  }
  red.m = static_cast<int>(red.kept.size());
  red.q.resize(red.m);
  for (int j = 0; j < red.m; ++j) red.q[j] = q_all[red.kept[j]];
  for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
    const auto& b = prob.blocks[bi];
    detail::ReducedBlock rb;
    rb.size = b.size;
    rb.h = block_value(b, aff.y0);
    for (int j : red.kept) rb.coeff.push_back(std::move(coeff_all[bi][j]));
    red.blocks.push_back(std::move(rb));
  }

  auto to_y = [&](const VectorXd& x) {
    VectorXd y = aff.y0;
    VectorXd full = VectorXd::Zero(mr_all);
    for (int j = 0; j < red.m; ++j) full[red.kept[j]] = x[j];
    for (int i = 0; i < prob.num_vars; ++i)
      for (const auto& [j, a] : aff.rows[i]) y[i] += a * full[j];
    return y;
  };

  const auto nb = red.blocks.size();
  int nu = 0;
  for (const auto& b : red.blocks) nu += b.size;

  if (red.m == 0 || nu == 0) {
    // nothing to optimize; only the constant blocks remain to be checked
    double me = std::numeric_limits<double>::infinity();
    for (const auto& b : red.blocks) me = std::min(me, detail::min_eig(b.h));
    double hs = 1.0;
    for (const auto& b : red.blocks) hs = std::max(hs, b.h.cwiseAbs().maxCoeff());
    sol.status = me >= -opt.tol_feas * hs ? SdpStatus::optimal : SdpStatus::primal_infeasible;
    if (sol.status == SdpStatus::primal_infeasible) sol.diagnostics = "fixed block is not positive semidefinite";
    sol.kkt.primal = sol.kkt.dual = sol.kkt.gap = 0.0;
    finish(to_y(VectorXd::Zero(red.m)));
    sol.dual_obj = sol.primal_obj;
    return sol;
  }

  auto F = [&](const VectorXd& x) {
    std::vector<MatrixXd> out;
    for (const auto& b : red.blocks) out.push_back(detail::apply_F(b, x));
    return out;
  };
  auto Fadj = [&](const std::vector<MatrixXd>& z) {
    VectorXd out = VectorXd::Zero(red.m);
    for (std::size_t bi = 0; bi < nb; ++bi) detail::add_adjoint(red.blocks[bi], z[bi], out);
    return out;
  };
  auto inner = [&](const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
    double s = 0.0;
    for (std::size_t bi = 0; bi < nb; ++bi) s += a[bi].cwiseProduct(b[bi]).sum();
    return s;
  };
  auto norm = [&](const std::vector<MatrixXd>& a) { return std::sqrt(inner(a, a)); };
  std::vector<MatrixXd> h;
  for (const auto& b : red.blocks) h.push_back(b.h);
  const double hnorm = std::max(1.0, norm(h));
  const double qnorm = std::max(1.0, red.q.norm());

  auto factor = [&](const MatrixXd& H, Eigen::LLT<MatrixXd>& llt) {
    llt.compute(H);
    if (llt.info() == Eigen::Success) return true;
    double d = H.diagonal().cwiseAbs().maxCoeff();
    for (double reg : {1e-14, 1e-12, 1e-10}) {
      MatrixXd Hr = H;
      Hr.diagonal().array() += reg * std::max(d, 1.0);
      llt.compute(Hr);
      if (llt.info() == Eigen::Success) return true;
    }
    return false;
  };

  // Starting point: least-norm primal and dual estimates shifted into the cone.
  std::vector<MatrixXd> ident;
  for (const auto& b : red.blocks) ident.push_back(MatrixXd::Identity(b.size, b.size));
  Eigen::LLT<MatrixXd> llt, gram;
  if (!factor(detail::normal_matrix(red, ident), gram)) {
    sol.status = SdpStatus::max_iterations;
    sol.diagnostics = "singular normal system: block coefficient matrices are linearly dependent";
    return finish(aff.y0);
  }
  VectorXd x = -gram.solve(Fadj(h));
  std::vector<MatrixXd> S = F(x), Z = F(gram.solve(red.q));
  auto shift = [&](std::vector<MatrixXd>& v) {
    for (auto& m : v) m = detail::sym(m);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& m : v) lo = std::min(lo, detail::min_eig(m));
    if (lo >= 1e-8)
      return;
    for (auto& m : v) m.diagonal().array() += 1.0 + std::max(-lo, 0.0);
  };
  for (std::size_t bi = 0; bi < nb; ++bi) S[bi] += h[bi];
  shift(S);
  shift(Z);
  double tau = 1.0, kappa = 1.0;

  std::vector<detail::Scaling> W(nb);
  std::vector<MatrixXd> R(nb);
  int iter = 0, stalled = 0;
  for (;; ++iter) {
    // residuals of the embedding
    VectorXd rx = red.q * tau - Fadj(Z);
    std::vector<MatrixXd> Fx = F(x), rs(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) rs[bi] = S[bi] - Fx[bi] - h[bi] * tau;
    double hz = inner(h, Z), qx = red.q.dot(x);
    double rt = kappa + qx + hz;
    double sz = inner(S, Z);

    double pcost = qx / tau + red.q0, dcost = -hz / tau + red.q0;
    double pres = norm(rs) / tau / hnorm;
    double dres = rx.norm() / tau / qnorm;
    double relgap = std::max(std::abs(pcost - dcost), sz / (tau * tau)) / (1.0 + std::abs(pcost));
    sol.kkt.primal = pres;
    sol.kkt.dual = dres;
    sol.kkt.gap = relgap;
    sol.kkt.iterations = iter;

    if (pres <= opt.tol_feas && dres <= opt.tol_feas && relgap <= opt.tol_gap) {
      sol.status = SdpStatus::optimal;
      sol.dual_obj = dcost;
      for (auto& z : Z) sol.dual_blocks.push_back(z / tau);
      finish(to_y(x / tau));
      return sol;
    }
    if (hz < 0.0) {
      double pinf = Fadj(Z).norm() / qnorm / (-hz);
      if (pinf <= opt.tol_feas) {
        sol.status = SdpStatus::primal_infeasible;
        sol.kkt.certificate = pinf;
        for (auto& z : Z) sol.dual_blocks.push_back(z / (-hz));
        sol.diagnostics = "dual ray Z with F*(Z) = 0 and <C, Z> < 0";
        finish(to_y(x / tau));
        sol.dual_obj = std::numeric_limits<double>::infinity();
        return sol;
      }
    }
    if (qx < 0.0) {
      std::vector<MatrixXd> ray(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) ray[bi] = S[bi] - Fx[bi];
      double dinf = norm(ray) / hnorm / (-qx);
      if (dinf <= opt.tol_feas) {
        sol.status = SdpStatus::dual_infeasible_or_unbounded;
        sol.kkt.certificate = dinf;
        sol.diagnostics = "primal ray x with F(x) PSD and q'x < 0";
        finish(to_y(x / tau));
        return sol;
      }
    }
    if (iter >= opt.max_iter) {
      sol.status = SdpStatus::max_iterations;
      sol.diagnostics = "iteration limit reached";
      break;
    }

    bool ok = true;
    for (std::size_t bi = 0; bi < nb && ok; ++bi) {
      ok = detail::nt_scaling(S[bi], Z[bi], W[bi]);
      R[bi] = W[bi].R;
    }
    if (!ok) {
      sol.status = SdpStatus::max_iterations;
      sol.diagnostics = "numerical breakdown: iterate left the cone interior";
      break;
    }
    const double mu = (sz + tau * kappa) / (nu + 1);
    if (!factor(detail::normal_matrix(red, R), llt)) {
      sol.status = SdpStatus::max_iterations;
      sol.diagnostics = "numerical breakdown: normal matrix is not positive definite";
      break;
    }

    // H x = rhs, refined against the operator x -> F*(R F(x) R) since H is
    // badly conditioned near the solution
    auto normal_solve = [&](const VectorXd& rhs) {
      VectorXd sol_x = llt.solve(rhs);
      for (int pass = 0; pass < 2; ++pass) {
        std::vector<MatrixXd> Fx_ = F(sol_x);
        for (std::size_t bi = 0; bi < nb; ++bi) Fx_[bi] = R[bi] * Fx_[bi] * R[bi];
        VectorXd res = rhs - Fadj(Fx_);
        if (!(res.norm() > 1e-15 * rhs.norm())) break;
        sol_x += llt.solve(res);
      }
      return sol_x;
    };
    std::vector<MatrixXd> RhR(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) RhR[bi] = R[bi] * h[bi] * R[bi];
    VectorXd x1 = normal_solve(-(Fadj(RhR) + red.q));
    std::vector<MatrixXd> Fx1 = F(x1), Z1(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) Z1[bi] = detail::sym(R[bi] * (-Fx1[bi] - h[bi]) * R[bi]);
    const double denom = -kappa / tau + red.q.dot(x1) + inner(h, Z1);

    struct Dir {
      VectorXd dx;
      std::vector<MatrixXd> dS, dZ, dSs, dZs;  // unscaled and scaled
      double dtau = 0.0, dkappa = 0.0;
    };
    // Newton system in (dx, dS, dZ, dtau, dkappa):
    //   -F*(dZ) + q dtau = bx          dS - F(dx) - h dtau = bs
    //   dkappa + q'dx + <h, dZ> = bt   r^-1 dS r^-T + r' dZ r = bc
    //   tau dkappa + kappa dtau = bk
    struct Rhs {
      VectorXd bx;
      std::vector<MatrixXd> bs, bc;
      double bt = 0.0, bk = 0.0;
    };
    auto linear_solve = [&](const Rhs& b) {
      Dir d;
      std::vector<MatrixXd> P(nb), RPR(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        P[bi] = W[bi].r * b.bc[bi] * W[bi].r.transpose() - b.bs[bi];
        RPR[bi] = R[bi] * P[bi] * R[bi];
      }
      VectorXd x0 = normal_solve(b.bx + Fadj(RPR));
      std::vector<MatrixXd> Fx0 = F(x0), Z0(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) Z0[bi] = detail::sym(R[bi] * (P[bi] - Fx0[bi]) * R[bi]);
      d.dtau = (b.bt - b.bk / tau - red.q.dot(x0) - inner(h, Z0)) / denom;
      d.dx = x0 + d.dtau * x1;
      std::vector<MatrixXd> Fdx = F(d.dx);
      d.dS.resize(nb);
      d.dZ.resize(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        d.dZ[bi] = Z0[bi] + d.dtau * Z1[bi];
        d.dS[bi] = detail::sym(Fdx[bi] + h[bi] * d.dtau + b.bs[bi]);
      }
      d.dkappa = (b.bk - kappa * d.dtau) / tau;
      return d;
    };
    auto scale_dir = [&](Dir& d) {
      d.dSs.resize(nb);
      d.dZs.resize(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        d.dSs[bi] = detail::sym(W[bi].rinv * d.dS[bi] * W[bi].rinv.transpose());
        d.dZs[bi] = detail::sym(W[bi].r.transpose() * d.dZ[bi] * W[bi].r);
      }
    };
    // R(.)R and the tau elimination lose digits near the boundary, so the
    // solution is refined against the residual of the unreduced system
    auto direction = [&](double eta, const std::vector<MatrixXd>& rc, double rtc) {
      Rhs b;
      b.bx = -(1.0 - eta) * rx;
      b.bt = -(1.0 - eta) * rt;
      b.bk = rtc;
      b.bs.resize(nb);
      b.bc.resize(nb);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        b.bs[bi] = -(1.0 - eta) * rs[bi];
        const auto& lam = W[bi].lambda;
        MatrixXd t = rc[bi];
        for (Eigen::Index i = 0; i < t.rows(); ++i)
          for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) *= 2.0 / (lam[i] + lam[j]);
        b.bc[bi] = t;
      }
      Dir d = linear_solve(b);
      for (int pass = 0; pass < 2; ++pass) {
        scale_dir(d);
        Rhs e;
        e.bx = b.bx - (-Fadj(d.dZ) + red.q * d.dtau);
        e.bt = b.bt - (d.dkappa + red.q.dot(d.dx) + inner(h, d.dZ));
        e.bk = b.bk - (tau * d.dkappa + kappa * d.dtau);
        e.bs.resize(nb);
        e.bc.resize(nb);
        std::vector<MatrixXd> Fdx = F(d.dx);
        double size = e.bx.norm() + std::abs(e.bt) + std::abs(e.bk);
        for (std::size_t bi = 0; bi < nb; ++bi) {
          e.bs[bi] = b.bs[bi] - (d.dS[bi] - Fdx[bi] - h[bi] * d.dtau);
          e.bc[bi] = b.bc[bi] - (d.dSs[bi] + d.dZs[bi]);
          size += e.bs[bi].norm() + e.bc[bi].norm();
        }
        if (!(size > 0.0)) break;
        Dir c = linear_solve(e);
        d.dx += c.dx;
        for (std::size_t bi = 0; bi < nb; ++bi) {
          d.dS[bi] += c.dS[bi];
          d.dZ[bi] += c.dZ[bi];
        }
        d.dtau += c.dtau;
        d.dkappa += c.dkappa;
      }
      // enforce the dual equation exactly through the well-conditioned Gram matrix
      std::vector<MatrixXd> fix = F(gram.solve(red.q * d.dtau - b.bx - Fadj(d.dZ)));
      for (std::size_t bi = 0; bi < nb; ++bi) d.dZ[bi] += fix[bi];
      scale_dir(d);
      return d;
    };
    auto step_to_boundary = [&](const Dir& d) {
      double a = std::numeric_limits<double>::infinity();
      for (std::size_t bi = 0; bi < nb; ++bi) {
        a = std::min(a, detail::max_step(W[bi].lambda, d.dSs[bi]));
        a = std::min(a, detail::max_step(W[bi].lambda, d.dZs[bi]));
      }
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // predictor
    std::vector<MatrixXd> rc(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) rc[bi] = -MatrixXd(W[bi].lambda.array().square().matrix().asDiagonal());
    Dir aff_dir = direction(0.0, rc, -tau * kappa);
    double alpha_a = std::min(1.0, step_to_boundary(aff_dir));
    double sigma = std::pow(1.0 - alpha_a, 3);

    // combined predictor-corrector
    for (std::size_t bi = 0; bi < nb; ++bi) {
      MatrixXd corr = 0.5 * (aff_dir.dSs[bi] * aff_dir.dZs[bi] + aff_dir.dZs[bi] * aff_dir.dSs[bi]);
      rc[bi] -= corr;
      rc[bi].diagonal().array() += sigma * mu;
    }
    Dir dir = direction(sigma, rc, -tau * kappa + sigma * mu - aff_dir.dtau * aff_dir.dkappa);
    double alpha = std::min(1.0, 0.99 * step_to_boundary(dir));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      sol.status = SdpStatus::max_iterations;
      sol.diagnostics = "numerical breakdown: non-positive step";
      break;
    }
    stalled = alpha < 1e-8 ? stalled + 1 : 0;
    if (stalled >= 5) {
      sol.status = SdpStatus::max_iterations;
      sol.diagnostics = "stalled: step lengths below 1e-8";
      break;
    }
    x += alpha * dir.dx;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      S[bi] = detail::sym(S[bi] + alpha * dir.dS[bi]);
      Z[bi] = detail::sym(Z[bi] + alpha * dir.dZ[bi]);
    }
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }
  sol.kkt.iterations = iter;
  for (auto& z : Z) sol.dual_blocks.push_back(z / tau);
  sol.dual_obj = -inner(h, Z) / tau + red.q0;
  return finish(to_y(x / tau));
}

}  // namespace r1tc::sdp
