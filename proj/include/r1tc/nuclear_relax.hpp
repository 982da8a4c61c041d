// Nuclear-norm relaxation of the rank-1 matrix recovery problem:
//
//     min trace(W1) + trace(W2)   s.t.  [[W1, X], [X', W2]] PSD,
//                                       minor equations on X,  X_anchor = 1
//
// and the symmetric variant min trace(V) with V PSD.
#pragma once

#include "r1tc/sdp.hpp"
#include "r1tc/strong_completion.hpp"

#include <functional>

namespace r1tc {

struct NuclearOutcome {
  Eigen::MatrixXd X;                // n1 x n2, or the symmetric V
  Eigen::VectorXd singular_values;  // nonincreasing (eigenvalues for V)
  int numerical_rank = 0;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> factors;  // (a, b), or (v, v)
  sdp::SdpStatus sdp_status = sdp::SdpStatus::max_iterations;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

struct NuclearResult {
  std::optional<CompletionResult> result;  // present when a completion was verified
  NuclearOutcome outcome;
  std::string message;
};

struct NuclearOptions {
  double rank_tol = 1e-6;
  double feas_tol = 1e-6;
  SymmetricSource symmetric_source = SymmetricSource::listed;
  sdp::SdpOptions sdp;
};

namespace detail {

/// Variable id of the upper-triangle entry (p, q) of a symmetric N x N matrix.
inline int upper_index(int p, int q, int N) {
  if (p > q) std::swap(p, q);
  return p * N - p * (p - 1) / 2 + (q - p);
}

/// SDP over the upper triangle of one N x N PSD matrix with trace objective.
inline sdp::SdpProblem trace_min_skeleton(int N) {
  sdp::SdpProblem p;
  p.num_vars = N * (N + 1) / 2;
  p.objective = Eigen::VectorXd::Zero(p.num_vars);
  sdp::LmiBlock b(N, p.num_vars);
  for (int r = 0; r < N; ++r)
    for (int c = r; c < N; ++c) b.add(upper_index(r, c, N), r, c, 1.0);
  for (int r = 0; r < N; ++r) p.objective[upper_index(r, r, N)] = 1.0;
  p.blocks.push_back(std::move(b));
  return p;
}

inline void add_minor_rows(sdp::SdpProblem& p, const ConstraintSystem& sys,
                           const std::function<int(const Pair&)>& var_of) {
  for (const auto& row : sys.rows) {
    sdp::EqualityRow e;
    int vs = var_of(row.second), vf = var_of(row.first);
    if (vs == vf) {
      if (row.coeff_first + row.coeff_second == 0.0) continue;
      e.coeffs.emplace_back(vs, row.coeff_first + row.coeff_second);
    } else {
      if (row.coeff_first != 0.0) e.coeffs.emplace_back(vs, row.coeff_first);
      if (row.coeff_second != 0.0) e.coeffs.emplace_back(vf, row.coeff_second);
    }
    if (!e.coeffs.empty()) p.equalities.push_back(std::move(e));
  }
}

}  // namespace detail

/// One PSD block [[W1, X], [X', W2]] of side n1 + n2 over its upper
/// triangle; equalities are the minor rows (zero coefficients dropped)
/// followed by X_anchor = 1.
inline sdp::SdpProblem build_nuclear_sdp(const PartialTensor& t) {
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) throw std::invalid_argument("nuclear relaxation requires a nonzero anchor");
  const int n1 = t.dim(0), n2 = t.dim(1), N = n1 + n2;
  auto p = detail::trace_min_skeleton(N);
  auto x_var = [&](const Pair& ij) { return detail::upper_index(ij[0], n1 + ij[1], N); };
  detail::add_minor_rows(p, build_minors(t), x_var);
  p.equalities.push_back({{{x_var({anchor.index[0], anchor.index[1]}), 1.0}}, 1.0});
  return p;
}

/// Single PSD block V of side n with symmetric minors and V_anchor = 1.
inline sdp::SdpProblem build_nuclear_sdp_symmetric(const PartialTensor& t,
                                                   SymmetricSource source = SymmetricSource::listed) {
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) throw std::invalid_argument("nuclear relaxation requires a nonzero anchor");
  const int n = t.dim(0);
  auto p = detail::trace_min_skeleton(n);
  auto v_var = [&](const Pair& ij) { return detail::upper_index(ij[0], ij[1], n); };
  detail::add_minor_rows(p, build_minors_symmetric(t, source), v_var);
  p.equalities.push_back({{{v_var({anchor.index[0], anchor.index[1]}), 1.0}}, 1.0});
  return p;
}

inline int numerical_rank(const Eigen::VectorXd& spectrum, double rank_tol) {
  if (spectrum.size() == 0 || !(spectrum[0] > 0.0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i)
    if (spectrum[i] > rank_tol * spectrum[0]) ++r;
  return r;
}

/// Solve the nuclear relaxation; on a numerically rank-1 X take
/// a = u / u_anchor, b = sigma u_anchor v (so a_anchor = 1, b_anchor ~ X_anchor = 1)
/// and back-solve c. Infeasibility of the SDP is not a verdict here.
inline NuclearResult solve_nuclear(const PartialTensor& t, const NuclearOptions& opt = {}) {
  NuclearResult out;
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) {
    out.result = zero_completion(t, Method::nuclear);
    return out;
  }
  const int n1 = t.dim(0), n2 = t.dim(1);
  auto sol = sdp::solve(build_nuclear_sdp(t), opt.sdp);
  auto& oc = out.outcome;
  oc.sdp_status = sol.status;
  oc.objective = sol.primal_obj;
  if (sol.status != sdp::SdpStatus::optimal) {
    out.message = std::string("nuclear SDP not solved: ") + sdp::to_string(sol.status);
    return out;
  }
  oc.X = sol.block_values[0].block(0, n1, n1, n2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(oc.X, Eigen::ComputeFullU | Eigen::ComputeFullV);
  oc.singular_values = svd.singularValues();
  oc.numerical_rank = numerical_rank(oc.singular_values, opt.rank_tol);
  if (oc.numerical_rank != 1) {
    out.message = "rank_failure: numerical rank " + std::to_string(oc.numerical_rank);
    return out;
  }
  const int ia = anchor.index[0];
  Eigen::VectorXd u = svd.matrixU().col(0), v = svd.matrixV().col(0);
  Eigen::VectorXd a = u / u[ia];
  Eigen::VectorXd b = oc.singular_values[0] * u[ia] * v;
  oc.factors = std::make_pair(a, b);
  auto bs = back_solve_c(t, a, b, opt.feas_tol);
  if (!bs.feasible) {
    out.message = "rank-1 X but c back-solve failed on slice " + std::to_string(bs.failing_slice + 1);
    return out;
  }
  CompletionResult r;
  r.a = a;
  r.b = b;
  r.c = bs.c;
  r.c_determined = bs.determined;
  r.method = Method::nuclear;
  r.residual = residual(t, a, b, bs.c);
  r.status = r.residual <= opt.feas_tol ? Status::completed : Status::inconclusive;
  if (r.status == Status::completed) out.result = std::move(r);
  else out.message = "rank-1 X but residual above tolerance";
  return out;
}

/// Symmetric variant: minimize trace(V); on rank 1 take v = sqrt(lambda_1) u_1
/// with v_anchor > 0 (so v_i v_j = V_ij = 1 at the anchor pair), fit tau by
/// least squares and set a = b = c = cbrt(tau) v.
inline NuclearResult solve_nuclear_symmetric(const PartialTensor& t, const NuclearOptions& opt = {}) {
  if (!t.symmetric()) throw std::invalid_argument("solve_nuclear_symmetric requires a symmetric tensor");
  NuclearResult out;
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) {
    out.result = zero_completion(t, Method::nuclear);
    return out;
  }
  auto sol = sdp::solve(build_nuclear_sdp_symmetric(t, opt.symmetric_source), opt.sdp);
  auto& oc = out.outcome;
  oc.sdp_status = sol.status;
  oc.objective = sol.primal_obj;
  if (sol.status != sdp::SdpStatus::optimal) {
    out.message = std::string("nuclear SDP not solved: ") + sdp::to_string(sol.status);
    return out;
  }
  oc.X = sol.block_values[0];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oc.X);
  oc.singular_values = es.eigenvalues().reverse();
  Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
  oc.numerical_rank = numerical_rank(oc.singular_values, opt.rank_tol);
  if (oc.numerical_rank != 1) {
    out.message = "rank_failure: numerical rank " + std::to_string(oc.numerical_rank);
    return out;
  }
  Eigen::VectorXd v = std::sqrt(std::max(oc.singular_values[0], 0.0)) * vecs.col(0);
  if (v[anchor.index[0]] < 0) v = -v;
  oc.factors = std::make_pair(v, v);
  auto r = symmetric_from_direction(t, v, Method::nuclear, opt.feas_tol);
  if (r.status == Status::completed) out.result = std::move(r);
  else out.message = "rank-1 V but residual above tolerance";
  return out;
}

}  // namespace r1tc
