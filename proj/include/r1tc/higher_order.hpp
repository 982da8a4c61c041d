// Order-4 tensors: reshape (k, l) into one cubic mode, complete the cubic
// tensor, then split its third factor into c d' by a rank-1 matrix step.
#pragma once

#include "r1tc/pipeline.hpp"

namespace r1tc {

using Index4 = std::array<int, 4>;

/// col_major: ell = (l-1) n3 + k (default).
/// row_major: ell = (k-1) n4 + l.
enum class Ordering { col_major, row_major };
enum class FillPolicy { zero_fill, complete };

class HigherTensor {
 public:
  HigherTensor() = default;
  explicit HigherTensor(std::array<int, 4> dims) : dims_(dims) {
    for (int d : dims_)
      if (d < 1) throw std::invalid_argument("tensor dimensions must be positive");
  }

  const std::array<int, 4>& dims() const { return dims_; }
  int dim(int mode) const { return dims_[mode]; }
  const std::map<Index4, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void set(const Index4& idx, double value) {
    for (int m = 0; m < 4; ++m)
      if (idx[m] < 0 || idx[m] >= dims_[m]) throw std::out_of_range("index outside tensor dimensions");
    if (!std::isfinite(value)) throw std::invalid_argument("observed values must be finite");
    auto [it, inserted] = entries_.emplace(idx, value);
    if (!inserted && it->second != value) throw std::invalid_argument("conflicting values for one index");
  }

 private:
  std::array<int, 4> dims_{1, 1, 1, 1};
  std::map<Index4, double> entries_;
};

/// `dims n1 n2 n3 n4` header, then `i j k l value` lines (1-based).
inline HigherTensor parse_higher_tensor(const std::string& text) {
  auto raw = detail::read_raw(text);
  if (raw.dims.size() != 4) throw ParseError(1, "order-4 tensor file needs exactly four dimensions");
  if (raw.symmetric) throw ParseError(1, "symmetric order-4 files are not supported");
  HigherTensor h({raw.dims[0], raw.dims[1], raw.dims[2], raw.dims[3]});
  for (const auto& [lineno, tok] : raw.rows) {
    if (tok.size() != 5) throw ParseError(lineno, "expected 'i j k l value'");
    Index4 idx;
    for (int m = 0; m < 4; ++m) {
      int v = detail::parse_int(tok[m], lineno);
      if (v < 1 || v > raw.dims[m]) throw ParseError(lineno, "index out of range");
      idx[m] = v - 1;
    }
    try {
      h.set(idx, detail::parse_double(tok[4], lineno));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return h;
}

inline std::string serialize_higher_tensor(const HigherTensor& h) {
  std::ostringstream os;
  os << "dims " << h.dim(0) << ' ' << h.dim(1) << ' ' << h.dim(2) << ' ' << h.dim(3) << '\n';
  for (const auto& [idx, v] : h.entries())
    os << idx[0] + 1 << ' ' << idx[1] + 1 << ' ' << idx[2] + 1 << ' ' << idx[3] + 1 << ' '
       << detail::format_double(v) << '\n';
  return os.str();
}

/// Number of dimensions declared in a tensor file header.
inline std::size_t file_order(const std::string& text) { return detail::read_raw(text).dims.size(); }

/// 0-based flattened position of (k, l).
inline int flat_index(int k, int l, int n3, int n4, Ordering o) {
  return o == Ordering::col_major ? l * n3 + k : k * n4 + l;
}

inline std::pair<int, int> unflatten(int ell, int n3, int n4, Ordering o) {
  return o == Ordering::col_major ? std::pair{ell % n3, ell / n3} : std::pair{ell / n4, ell % n4};
}

inline PartialTensor reshape_to_cubic(const HigherTensor& h, Ordering o = Ordering::col_major) {
  const int n3 = h.dim(2), n4 = h.dim(3);
  PartialTensor t({h.dim(0), h.dim(1), n3 * n4});
  for (const auto& [idx, v] : h.entries()) t.set({idx[0], idx[1], flat_index(idx[2], idx[3], n3, n4, o)}, v);
  return t;
}

inline double residual(const HigherTensor& h, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, const Eigen::VectorXd& d) {
  double worst = 0.0;
  for (const auto& [idx, v] : h.entries())
    worst = std::max(worst, std::abs(v - a[idx[0]] * b[idx[1]] * c[idx[2]] * d[idx[3]]));
  return worst;
}

struct Unfolding {
  Eigen::MatrixXd matrix;            // n3 x n4, free entries as filled by the policy
  std::vector<std::vector<bool>> determined;
  Eigen::VectorXd singular_values;   // zero_fill only
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> factors;  // (c, d)
  std::string message;               // why no factors were produced
};

namespace detail {

/// Scale d so its entry of largest magnitude (first on ties) is 1.
inline void normalize_cd(Eigen::VectorXd& c, Eigen::VectorXd& d) {
  Eigen::Index p = 0;
  for (Eigen::Index i = 1; i < d.size(); ++i)
    if (std::abs(d[i]) > std::abs(d[p])) p = i;
  if (d[p] == 0.0) return;
  c *= d[p];
  d /= d[p];
}

}  // namespace detail

/// Rank-1 split of the third cubic factor. zero_fill: free entries are 0 and
/// the unfolding must pass sigma_2 <= rank_tol sigma_1. complete: the
/// determined entries form an order-2 partial tensor that goes through the
/// strong-completion machinery.
inline Unfolding unfold_third_factor(const Eigen::VectorXd& c_hat, const std::vector<bool>& determined, int n3, int n4,
                                     Ordering o, FillPolicy policy, double rank_tol = 1e-6, double tol = 1e-6) {
  if (c_hat.size() != n3 * n4 || determined.size() != static_cast<std::size_t>(n3 * n4))
    throw std::invalid_argument("third factor length must be n3 * n4");
  Unfolding u;
  u.matrix = Eigen::MatrixXd::Zero(n3, n4);
  u.determined.assign(n3, std::vector<bool>(n4, false));
  bool any = false;
  for (int ell = 0; ell < n3 * n4; ++ell) {
    auto [k, l] = unflatten(ell, n3, n4, o);
    if (!determined[ell]) continue;
    u.matrix(k, l) = c_hat[ell];
    u.determined[k][l] = true;
    any = true;
  }
  if (!any) {
    u.message = "not_rank1: no determined entries in the third factor";
    return u;
  }

  if (policy == FillPolicy::zero_fill) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u.singular_values = svd.singularValues();
    const auto& s = u.singular_values;
    if (s.size() > 1 && s[1] > rank_tol * s[0]) {
      u.message = "not_rank1: zero-filled unfolding has sigma2/sigma1 = " + detail::format_double(s[1] / s[0]);
      return u;
    }
    Eigen::VectorXd c = s[0] * svd.matrixU().col(0), d = svd.matrixV().col(0);
    detail::normalize_cd(c, d);
    u.factors = std::make_pair(c, d);
    return u;
  }

  PartialTensor m({n3, n4, 1});
  for (int k = 0; k < n3; ++k)
    for (int l = 0; l < n4; ++l)
      if (u.determined[k][l]) m.set({k, l, 0}, u.matrix(k, l));
  StrongOptions so;
  so.feas_tol = tol;
  auto sc = complete_strong(m, so);
  if (!sc.result) {
    u.message = std::string("not_rank1: determined entries are not strongly completable (") + to_string(sc.signal) + ")";
    return u;
  }
  Eigen::VectorXd c = sc.result->a, d = sc.result->b * sc.result->c[0];
  detail::normalize_cd(c, d);
  u.matrix = c * d.transpose();
  u.factors = std::make_pair(c, d);
  return u;
}

struct Order4Options {
  Ordering ordering = Ordering::col_major;
  FillPolicy policy = FillPolicy::complete;
  PipelineOptions cubic;
};

struct Order4Result {
  PartialTensor reshaped;
  PipelineResult cubic;
  Unfolding unfolding;
  std::optional<std::array<Eigen::VectorXd, 4>> factors;
  double residual = std::numeric_limits<double>::infinity();
  Status status = Status::inconclusive;
  std::string message;
};

inline Order4Result complete_order4(const HigherTensor& h, const Order4Options& opt = {}) {
  Order4Result out;
  out.reshaped = reshape_to_cubic(h, opt.ordering);
  out.cubic = complete(out.reshaped, opt.cubic);
  const auto& r = out.cubic.result;
  if (r.status != Status::completed) {
    out.status = r.status;
    out.message = "cubic completion " + std::string(to_string(r.status)) + ": " + r.message;
    return out;
  }
  std::vector<bool> det = r.c_determined;
  if (det.size() != static_cast<std::size_t>(r.c.size())) det.assign(r.c.size(), true);
  out.unfolding = unfold_third_factor(r.c, det, h.dim(2), h.dim(3), opt.ordering, opt.policy, opt.cubic.rank_tol,
                                      opt.cubic.tol);
  if (!out.unfolding.factors) {
    out.message = out.unfolding.message;
    return out;
  }
  const auto& [c, d] = *out.unfolding.factors;
  out.factors = std::array<Eigen::VectorXd, 4>{r.a, r.b, c, d};
  out.residual = residual(h, r.a, r.b, c, d);
  if (out.residual <= opt.cubic.tol) {
    out.status = Status::completed;
  } else {
    out.message = "four-factor residual " + detail::format_double(out.residual) + " above tolerance";
  }
  return out;
}

}  // namespace r1tc
