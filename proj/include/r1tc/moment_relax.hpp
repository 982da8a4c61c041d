// Moment hierarchy for the anchored rank-1 system. The variables x collect
// the factor entries left free once a_anchor = b_anchor = 1 (or v_anchor = 1 for
// symmetric input); every minor becomes a polynomial of degree at most two.
#pragma once

#include "r1tc/nuclear_relax.hpp"

#include <chrono>
#include <random>
#include <unordered_map>

namespace r1tc {

using Exponent = std::vector<int>;

inline Exponent operator+(const Exponent& a, const Exponent& b) {
  Exponent out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline int total_degree(const Exponent& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

/// Exponents of all monomials of degree <= d in n variables, graded, and
/// lexicographically descending within one degree:
/// 1, x1, ..., xn, x1^2, x1 x2, ..., xn^2, x1^3, ...
class MonomialBasis {
 public:
  MonomialBasis(int n, int d) : n_(n), d_(d) {
    if (n < 0 || d < 0) throw std::invalid_argument("monomial basis needs n, d >= 0");
    if (n * std::log2(d + 1.0) > 62) throw std::invalid_argument("monomial basis too large to index");
    Exponent e(static_cast<std::size_t>(n), 0);
    for (int k = 0; k <= d; ++k) fill(e, 0, k);
  }

  int num_vars() const { return n_; }
  int degree() const { return d_; }
  std::size_t size() const { return exps_.size(); }
  const Exponent& operator[](std::size_t i) const { return exps_[i]; }
  const std::vector<Exponent>& exponents() const { return exps_; }

  /// Number of leading elements of degree <= k.
  std::size_t count_upto(int k) const {
    std::size_t c = 0;
    while (c < exps_.size() && total_degree(exps_[c]) <= k) ++c;
    return c;
  }

  /// Position of an exponent, or -1 when its degree exceeds d.
  int index(const Exponent& e) const {
    if (total_degree(e) > d_) return -1;
    auto it = pos_.find(key(e));
    return it == pos_.end() ? -1 : it->second;
  }

 private:
  std::uint64_t key(const Exponent& e) const {
    std::uint64_t k = 0;
    for (int v : e) k = k * static_cast<std::uint64_t>(d_ + 1) + static_cast<std::uint64_t>(v);
    return k;
  }
  void fill(Exponent& e, int pos, int remaining) {
    if (pos == n_) {
      if (remaining == 0) {
        pos_.emplace(key(e), static_cast<int>(exps_.size()));
        exps_.push_back(e);
      }
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      e[pos] = v;
      fill(e, pos + 1, remaining - v);
    }
    e[pos] = 0;
  }

  int n_ = 0, d_ = 0;
  std::vector<Exponent> exps_;
  std::unordered_map<std::uint64_t, int> pos_;
};

struct Polynomial {
  std::map<Exponent, double> terms;

  void add(const Exponent& e, double c) {
    if (c == 0.0) return;
    auto& v = terms[e];
    v += c;
    if (v == 0.0) terms.erase(e);
  }
  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms) d = std::max(d, total_degree(e));
    return d;
  }
  bool is_zero() const { return terms.empty(); }
  double eval(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms) {
      double m = c;
      for (std::size_t i = 0; i < e.size(); ++i) m *= std::pow(x[static_cast<Eigen::Index>(i)], e[i]);
      s += m;
    }
    return s;
  }
};

/// minors: the pairwise slice minors in (a, b).
/// slice_scaled: A_anchor a_i b_j = A_ijk mu_k on every slice holding a nonzero
/// entry, with mu_k nu_k = 1 (mu is 1 on the anchor slice). Its real points are
/// exactly the anchored completions, whereas the minors also vanish on points
/// where a whole slice of a_i b_j is zero.
enum class Formulation { minors, slice_scaled };

/// Anchored polynomial system. Free variables are ordered a (without the
/// anchor row), b (without the anchor column), then mu and nu per scaled
/// slice; symmetric input uses v without the anchor coordinate.
struct PolynomialSystem {
  int n_bar = 0;
  bool symmetric = false;
  Formulation formulation = Formulation::minors;
  Index3 anchor{0, 0, 0};
  std::vector<int> a_var, b_var;  // x position of a_i / b_j, -1 for the anchored entry (fixed to 1)
  std::vector<int> mu_var, nu_var;  // per slice; -1 when absent or fixed
  std::vector<Polynomial> phi;
  Eigen::MatrixXd objective_F;
  Polynomial f;
  /// A minor reduced to a nonzero constant: no completion exists.
  bool trivially_infeasible = false;
  std::string reason;

  /// Full factor vectors from x (b is unused for symmetric systems).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> factors(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a(static_cast<Eigen::Index>(a_var.size())), b(static_cast<Eigen::Index>(b_var.size()));
    for (std::size_t i = 0; i < a_var.size(); ++i) a[static_cast<Eigen::Index>(i)] = a_var[i] < 0 ? 1.0 : x[a_var[i]];
    for (std::size_t j = 0; j < b_var.size(); ++j) b[static_cast<Eigen::Index>(j)] = b_var[j] < 0 ? 1.0 : x[b_var[j]];
    return {a, b};
  }
};

namespace detail {

inline Exponent unit(int n, int var) {
  Exponent e(static_cast<std::size_t>(n), 0);
  if (var >= 0) e[var] = 1;
  return e;
}

}  // namespace detail

/// Anchor substitution, minors as polynomials, and the objective
/// [a; b]' F [a; b] with F = G G' + I for a seeded standard-normal G.
inline PolynomialSystem build_system(const PartialTensor& t, std::uint64_t seed,
                                     SymmetricSource source = SymmetricSource::listed,
                                     Formulation formulation = Formulation::minors) {
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) throw std::invalid_argument("moment relaxation requires a nonzero anchor");
  if (formulation == Formulation::slice_scaled && t.symmetric())
    throw std::invalid_argument("slice-scaled formulation is for nonsymmetric tensors");
  PolynomialSystem sys;
  sys.symmetric = t.symmetric();
  sys.formulation = formulation;
  sys.anchor = anchor.index;
  const int n1 = t.dim(0), n2 = t.dim(1);
  int next = 0;
  sys.a_var.assign(n1, -1);
  for (int i = 0; i < n1; ++i)
    if (i != anchor.index[0]) sys.a_var[i] = next++;
  if (sys.symmetric) {
    sys.b_var = sys.a_var;
  } else {
    sys.b_var.assign(n2, -1);
    for (int j = 0; j < n2; ++j)
      if (j != anchor.index[1]) sys.b_var[j] = next++;
  }
  const int ab_vars = next;
  const auto groups = slice_groups(t);
  sys.mu_var.assign(t.dim(2), -1);
  sys.nu_var.assign(t.dim(2), -1);
  std::vector<const SliceGroup*> scaled;
  if (formulation == Formulation::slice_scaled) {
    for (const auto& g : groups) {
      if (std::none_of(g.values.begin(), g.values.end(), [](double v) { return v != 0.0; })) continue;
      scaled.push_back(&g);
      if (g.k == anchor.index[2]) continue;
      sys.mu_var[g.k] = next++;
      sys.nu_var[g.k] = next++;
    }
  }
  sys.n_bar = next;
  const int n = next;
  auto mono = [&](const Pair& ij) {
    return detail::unit(n, sys.a_var[ij[0]]) + detail::unit(n, sys.b_var[ij[1]]);
  };
  auto push = [&](Polynomial p, int k) {
    if (p.is_zero()) return;
    if (p.degree() == 0) {
      sys.trivially_infeasible = true;
      sys.reason = "constraint on slice " + std::to_string(k + 1) + " reduces to a nonzero constant";
    }
    sys.phi.push_back(std::move(p));
  };

  if (formulation == Formulation::minors) {
    auto cs = sys.symmetric ? build_minors_symmetric(t, source) : build_minors(t);
    for (const auto& row : cs.rows) {
      Polynomial p;
      p.add(mono(row.second), row.coeff_first);
      p.add(mono(row.first), row.coeff_second);
      push(std::move(p), row.k);
    }
  } else {
    const double pivot = anchor.value;
    for (const auto* g : scaled) {
      const Exponent mu = detail::unit(n, sys.mu_var[g->k]);
      for (std::size_t s = 0; s < g->members.size(); ++s) {
        Polynomial p;
        p.add(mono(g->members[s]), pivot);
        p.add(mu, -g->values[s]);
        push(std::move(p), g->k);
      }
      if (sys.mu_var[g->k] >= 0) {
        Polynomial p;
        p.add(mu + detail::unit(n, sys.nu_var[g->k]), 1.0);
        p.add(detail::unit(n, -1), -1.0);
        push(std::move(p), g->k);
      }
    }
  }

  const int N = sys.symmetric ? n1 : n1 + n2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(N, N);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) G(r, c) = normal(rng);
  sys.objective_F = G * G.transpose() + Eigen::MatrixXd::Identity(N, N);
  std::vector<Exponent> z;  // monomial of each entry of [a; b]
  for (int i = 0; i < n1; ++i) z.push_back(detail::unit(n, sys.a_var[i]));
  if (!sys.symmetric)
    for (int j = 0; j < n2; ++j) z.push_back(detail::unit(n, sys.b_var[j]));
  for (int p = 0; p < N; ++p)
    for (int q = 0; q < N; ++q) sys.f.add(z[p] + z[q], sys.objective_F(p, q));
  for (int v = ab_vars; v < n; ++v) sys.f.add(detail::unit(n, v) + detail::unit(n, v), 1.0);
  return sys;
}

/// Level-l moment relaxation: variables y over the degree-2l basis, one PSD
/// block M_l[y], localizing rows <phi * x^gamma, y> = 0 for every
/// |gamma| <= 2l - deg(phi), and y_0 = 1.
struct MomentRelaxation {
  int level = 1;
  MonomialBasis basis;  // degree 2l
  std::size_t moment_side = 0;
  std::vector<std::vector<int>> moment_index;  // (p, q) -> position of alpha_p + alpha_q
  std::vector<std::vector<sdp::EqualityRow>> localizers;  // per phi
  Eigen::VectorXd objective_vector;
  sdp::SdpProblem problem;

  std::size_t y_dim() const { return basis.size(); }

  Eigen::MatrixXd moment_matrix(const Eigen::VectorXd& y, std::size_t side) const {
    Eigen::MatrixXd m(side, side);
    for (std::size_t p = 0; p < side; ++p)
      for (std::size_t q = 0; q < side; ++q) m(p, q) = y[moment_index[p][q]];
    return m;
  }
};

inline MomentRelaxation build_moment_sdp(const PolynomialSystem& sys, int level) {
  if (level < 1) throw std::invalid_argument("relaxation level must be at least 1");
  MomentRelaxation mr{level, MonomialBasis(sys.n_bar, 2 * level), 0, {}, {}, {}, {}};
  const auto& basis = mr.basis;
  const int m = static_cast<int>(basis.size());
  mr.moment_side = basis.count_upto(level);
  const auto side = mr.moment_side;

  auto& p = mr.problem;
  p.num_vars = m;
  sdp::LmiBlock block(static_cast<int>(side), m);
  mr.moment_index.assign(side, std::vector<int>(side, 0));
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = r; c < side; ++c) {
      int idx = basis.index(basis[r] + basis[c]);
      mr.moment_index[r][c] = mr.moment_index[c][r] = idx;
      block.add(idx, static_cast<int>(r), static_cast<int>(c), 1.0);
    }
  p.blocks.push_back(std::move(block));

  p.equalities.push_back({{{0, 1.0}}, 1.0});
  for (const auto& phi : sys.phi) {
    std::vector<sdp::EqualityRow> rows;
    int s = 2 * level - phi.degree();
    if (s >= 0) {
      std::size_t count = basis.count_upto(s);
      for (std::size_t g = 0; g < count; ++g) {
        sdp::EqualityRow row;
        for (const auto& [e, c] : phi.terms) row.coeffs.emplace_back(basis.index(e + basis[g]), c);
        rows.push_back(row);
        p.equalities.push_back(std::move(row));
      }
    }
    mr.localizers.push_back(std::move(rows));
  }

  mr.objective_vector = Eigen::VectorXd::Zero(m);
  for (const auto& [e, c] : sys.f.terms) mr.objective_vector[basis.index(e)] += c;
  p.objective = mr.objective_vector;
  return mr;
}

/// Smallest t in 1..level with M_t[y] numerically rank one (eigenvalues
/// above rank_tol * lambda_max), or nullopt.
inline std::optional<int> flat_truncation_rank1(const Eigen::VectorXd& y, const MomentRelaxation& mr,
                                                double rank_tol = 1e-6) {
  for (int t = 1; t <= mr.level; ++t) {
    std::size_t side = mr.basis.count_upto(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mr.moment_matrix(y, side), Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    if (numerical_rank(ev, rank_tol) == 1) return t;
  }
  return std::nullopt;
}

/// Point read from the degree-one moments, reassembled into factors and
/// checked on the observed entries.
inline std::optional<CompletionResult> extract_and_verify(const Eigen::VectorXd& y, const PolynomialSystem& sys,
                                                          const PartialTensor& t, double tol = 1e-6) {
  Eigen::VectorXd x = y.segment(1, sys.n_bar);
  auto [a, b] = sys.factors(x);
  CompletionResult r;
  if (sys.symmetric) {
    r = symmetric_from_direction(t, a, Method::moment, tol);
  } else {
    auto bs = back_solve_c(t, a, b, tol);
    if (!bs.feasible) return std::nullopt;
    r.a = a;
    r.b = b;
    r.c = bs.c;
    r.c_determined = bs.determined;
    r.method = Method::moment;
    r.residual = residual(t, a, b, bs.c);
    r.status = r.residual <= tol ? Status::completed : Status::inconclusive;
  }
  if (r.status != Status::completed) return std::nullopt;
  return r;
}

struct MomentOptions {
  std::uint64_t seed = 0;
  int max_level = 4;
  double tol = 1e-6;
  double rank_tol = 1e-6;
  SymmetricSource symmetric_source = SymmetricSource::listed;
  /// Retry a nonsymmetric instance with the slice-scaled system when the
  /// minors yield a rank-one point that is not a completion.
  bool slice_scaled_fallback = true;
  sdp::SdpOptions sdp;
};

struct LevelRecord {
  Formulation formulation = Formulation::minors;
  int level = 0;
  std::size_t y_dim = 0;
  std::size_t moment_side = 0;
  sdp::SdpStatus status = sdp::SdpStatus::max_iterations;
  std::optional<int> flat_t;
  bool verified = false;
  double seconds = 0.0;
  int iterations = 0;
};

struct MomentResult {
  CompletionResult result;
  std::vector<LevelRecord> levels;
};

inline const char* to_string(Formulation f) { return f == Formulation::minors ? "minors" : "slice_scaled"; }

/// Hierarchy loop over l = 1..max_level. An infeasible relaxation ends with
/// no_completion; a verified rank-one extraction ends with completed; running
/// out of levels leaves the instance inconclusive. For nonsymmetric input a
/// rank-one point that fails verification is a global minimizer of f on the
/// minors' variety, so higher levels return it again; the slice-scaled system
/// is tried instead, as it is when the minors' levels run out. Otherwise a
/// failed extraction moves to the next level.
inline MomentResult solve_moment(const PartialTensor& t, const MomentOptions& opt = {}) {
  MomentResult out;
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) {
    out.result = zero_completion(t, Method::moment);
    return out;
  }
  auto fail = [&](Status s, std::string msg) {
    out.result.a = Eigen::VectorXd::Zero(t.dim(0));
    out.result.b = Eigen::VectorXd::Zero(t.dim(1));
    out.result.c = Eigen::VectorXd::Zero(t.dim(2));
    out.result.method = Method::moment;
    out.result.status = s;
    out.result.message = std::move(msg);
    return out;
  };

  Formulation form = Formulation::minors;
  while (true) {
    auto sys = build_system(t, opt.seed, opt.symmetric_source, form);
    if (sys.trivially_infeasible) return fail(Status::no_completion, "certified infeasible (numerical): " + sys.reason);
    const bool can_switch = form == Formulation::minors && opt.slice_scaled_fallback && !t.symmetric();
    bool spurious = false;
    for (int level = 1; level <= opt.max_level && !(spurious && can_switch); ++level) {
      spurious = false;
      auto t0 = std::chrono::steady_clock::now();
      auto mr = build_moment_sdp(sys, level);
      auto sol = sdp::solve(mr.problem, opt.sdp);
      LevelRecord rec;
      rec.formulation = form;
      rec.level = level;
      rec.y_dim = mr.y_dim();
      rec.moment_side = mr.moment_side;
      rec.status = sol.status;
      rec.iterations = sol.kkt.iterations;
      std::optional<CompletionResult> found;
      // an iterate that stopped short of the tolerances can still carry the
      // point; extraction is checked against the data either way
      if (sol.status == sdp::SdpStatus::optimal || sol.status == sdp::SdpStatus::max_iterations) {
        rec.flat_t = flat_truncation_rank1(sol.y, mr, opt.rank_tol);
        if (rec.flat_t) {
          found = extract_and_verify(sol.y, sys, t, opt.tol);
          rec.verified = found.has_value();
          spurious = !found && sol.status == sdp::SdpStatus::optimal;
        }
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.levels.push_back(rec);
      if (sol.status == sdp::SdpStatus::primal_infeasible)
        return fail(Status::no_completion, "certified infeasible (numerical): relaxation of order " +
                                               std::to_string(level) + " is infeasible");
      if (found) {
        out.result = std::move(*found);
        out.result.message = std::string("rank-one moments at order ") + std::to_string(level) + " (" +
                             to_string(form) + ")";
        return out;
      }
    }
    if (can_switch) {
      form = Formulation::slice_scaled;
      continue;
    }
    return fail(Status::inconclusive, spurious ? "rank-one moments do not give a completion"
                                               : "no verified rank-one moments up to order " +
                                                     std::to_string(opt.max_level));
  }
}

}  // namespace r1tc
