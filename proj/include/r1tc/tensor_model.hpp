// Partially observed cubic tensors: storage, anchor selection, slice grouping,
// residual evaluation and the plain-text tensor file format.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace r1tc {

/// 0-based (i, j, k) index of a cubic tensor entry.
using Index3 = std::array<int, 3>;
/// 0-based (i, j) index of a matrix entry.
using Pair = std::array<int, 2>;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Sparse partially observed tensor of shape n1 x n2 x n3.
///
/// Entries are kept in a sorted map so iteration order is lexicographic in
/// (i, j, k). For symmetric tensors the key set is closed under index
/// permutations; `set` inserts all permutations at once.
class PartialTensor {
 public:
  PartialTensor() = default;
  PartialTensor(std::array<int, 3> dims, bool symmetric = false) : dims_(dims), symmetric_(symmetric) {
    for (int d : dims_)
      if (d < 1) throw std::invalid_argument("tensor dimensions must be positive");
    if (symmetric_ && !(dims_[0] == dims_[1] && dims_[1] == dims_[2]))
      throw std::invalid_argument("symmetric tensor requires n1 = n2 = n3");
  }

  const std::array<int, 3>& dims() const { return dims_; }
  int dim(int mode) const { return dims_[mode]; }
  bool symmetric() const { return symmetric_; }
  const std::map<Index3, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Entries exactly as they were supplied, before permutation closure.
  /// Equal to entries() for non-symmetric tensors.
  std::map<Index3, double> listed_entries() const {
    if (!symmetric_) return entries_;
    std::map<Index3, double> out;
    for (const auto& idx : listed_) out.emplace(idx, entries_.at(idx));
    return out;
  }

  bool contains(const Index3& idx) const { return entries_.count(idx) != 0; }
  double at(const Index3& idx) const {
    auto it = entries_.find(idx);
    if (it == entries_.end()) throw std::out_of_range("entry not observed");
    return it->second;
  }

  /// Insert an observed value (0-based index). Re-inserting the same value is a
  /// no-op; a conflicting value throws. Symmetric tensors insert every
  /// permutation of the index.
  void set(const Index3& idx, double value) {
    check_range(idx);
    if (!std::isfinite(value)) throw std::invalid_argument("observed values must be finite");
    if (!symmetric_) {
      insert_one(idx, value);
      return;
    }
    Index3 p = idx;
    std::sort(p.begin(), p.end());
    do {
      insert_one(p, value);
    } while (std::next_permutation(p.begin(), p.end()));
    listed_.insert(idx);
  }

  /// Same tensor with every observed value multiplied by `s`.
  PartialTensor scaled(double s) const {
    PartialTensor out(dims_, symmetric_);
    out.entries_ = entries_;
    out.listed_ = listed_;
    for (auto& [idx, v] : out.entries_) v *= s;
    return out;
  }

 private:
  void check_range(const Index3& idx) const {
    for (int m = 0; m < 3; ++m)
      if (idx[m] < 0 || idx[m] >= dims_[m])
        throw std::out_of_range("index (" + std::to_string(idx[0] + 1) + "," + std::to_string(idx[1] + 1) + "," +
                                std::to_string(idx[2] + 1) + ") outside tensor dimensions");
  }
  void insert_one(const Index3& idx, double value) {
    auto [it, inserted] = entries_.emplace(idx, value);
    if (!inserted && it->second != value)
      throw std::invalid_argument("conflicting values for index (" + std::to_string(idx[0] + 1) + "," +
                                  std::to_string(idx[1] + 1) + "," + std::to_string(idx[2] + 1) + ")");
  }

  std::array<int, 3> dims_{1, 1, 1};
  bool symmetric_ = false;
  std::map<Index3, double> entries_;
  std::set<Index3> listed_;
};

/// Observed (i, j) pairs sharing the third index k, in lexicographic order.
struct SliceGroup {
  int k = 0;
  std::vector<Pair> members;
  std::vector<double> values;
};

struct AnchorIndex {
  Index3 index{0, 0, 0};
  double value = 0.0;
  /// Every observed value is zero; the zero factors complete the tensor.
  bool all_zero() const { return value == 0.0; }
};

enum class Method { iterative, nuclear, moment };
enum class Status { completed, no_completion, inconclusive };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::iterative: return "iterative";
    case Method::nuclear: return "nuclear";
    case Method::moment: return "moment";
  }
  return "?";
}
inline const char* to_string(Status s) {
  switch (s) {
    case Status::completed: return "completed";
    case Status::no_completion: return "no_completion";
    case Status::inconclusive: return "inconclusive";
  }
  return "?";
}

struct SymmetricFactors {
  Eigen::VectorXd v;
  double tau = 0.0;
};

struct CompletionResult {
  Eigen::VectorXd a, b, c;
  double residual = std::numeric_limits<double>::infinity();
  Method method = Method::iterative;
  Status status = Status::inconclusive;
  /// Set for symmetric inputs: a = b = c = cbrt(tau) * v.
  std::optional<SymmetricFactors> symmetric;
  /// c_k pinned by observed data; false for slices with no usable equation.
  std::vector<bool> c_determined;
  std::string message;
};

/// Observed entry of largest magnitude; ties go to the lexicographically
/// smallest index.
inline AnchorIndex anchor_index(const PartialTensor& t) {
  if (t.empty()) throw std::invalid_argument("no observed entries");
  AnchorIndex best;
  best.index = t.entries().begin()->first;
  best.value = t.entries().begin()->second;
  for (const auto& [idx, v] : t.entries()) {
    if (std::abs(v) > std::abs(best.value)) {
      best.index = idx;
      best.value = v;
    }
  }
  return best;
}

inline std::vector<SliceGroup> slice_groups(const std::map<Index3, double>& entries) {
  std::map<int, SliceGroup> by_k;
  for (const auto& [idx, v] : entries) {
    auto& g = by_k[idx[2]];
    g.k = idx[2];
    g.members.push_back({idx[0], idx[1]});
    g.values.push_back(v);
  }
  // map order is (i, j, k); re-sort members within each slice by (i, j)
  std::vector<SliceGroup> out;
  out.reserve(by_k.size());
  for (auto& [k, g] : by_k) {
    std::vector<std::size_t> order(g.members.size());
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return g.members[x] < g.members[y]; });
    SliceGroup sorted{g.k, {}, {}};
    for (auto s : order) {
      sorted.members.push_back(g.members[s]);
      sorted.values.push_back(g.values[s]);
    }
    out.push_back(std::move(sorted));
  }
  return out;
}

inline std::vector<SliceGroup> slice_groups(const PartialTensor& t) { return slice_groups(t.entries()); }

/// max over observed entries of |A_ijk - a_i b_j c_k|.
inline double residual(const PartialTensor& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c) {
  if (a.size() != t.dim(0) || b.size() != t.dim(1) || c.size() != t.dim(2))
    throw std::invalid_argument("factor lengths do not match tensor dimensions");
  double worst = 0.0;
  for (const auto& [idx, v] : t.entries())
    worst = std::max(worst, std::abs(v - a[idx[0]] * b[idx[1]] * c[idx[2]]));
  return worst;
}

/// Result carrying the zero factors for an all-zero observed tensor.
inline CompletionResult zero_completion(const PartialTensor& t, Method method) {
  CompletionResult r;
  r.a = Eigen::VectorXd::Zero(t.dim(0));
  r.b = Eigen::VectorXd::Zero(t.dim(1));
  r.c = Eigen::VectorXd::Zero(t.dim(2));
  r.residual = 0.0;
  r.method = method;
  r.status = Status::completed;
  r.c_determined.assign(t.dim(2), false);
  if (t.symmetric()) r.symmetric = SymmetricFactors{Eigen::VectorXd::Zero(t.dim(0)), 0.0};
  r.message = "all observed entries are zero";
  return r;
}

/// Symmetric completion from a direction v: least-squares tau over
/// A_ijk = tau v_i v_j v_k, then a = b = c = cbrt(tau) v.
inline CompletionResult symmetric_from_direction(const PartialTensor& t, const Eigen::VectorXd& v, Method method,
                                                 double tol) {
  double num = 0.0, den = 0.0, data = 0.0;
  for (const auto& [idx, val] : t.entries()) {
    double p = v[idx[0]] * v[idx[1]] * v[idx[2]];
    num += p * val;
    den += p * p;
    data = std::max(data, std::abs(val));
  }
  CompletionResult r;
  r.method = method;
  r.c_determined.assign(t.dim(2), true);
  if (den <= tol * tol) {
    r.a = r.b = r.c = Eigen::VectorXd::Zero(t.dim(0));
    r.residual = data;
    r.status = data <= tol ? Status::completed : Status::inconclusive;
    r.symmetric = SymmetricFactors{v, 0.0};
    return r;
  }
  double tau = num / den;
  Eigen::VectorXd a = std::cbrt(tau) * v;
  r.a = r.b = r.c = a;
  r.residual = residual(t, a, a, a);
  r.status = r.residual <= tol ? Status::completed : Status::inconclusive;
  r.symmetric = SymmetricFactors{v, tau};
  return r;
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline int parse_int(const std::string& s, int line) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ParseError(line, "expected integer, got '" + s + "'");
  return v;
}

inline double parse_double(const std::string& s, int line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected number, got '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v)) throw ParseError(line, "expected finite number, got '" + s + "'");
  return v;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    if (std::stod(os.str()) == v) return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Header and body lines of a tensor file, comments and blanks removed.
struct RawTensorFile {
  std::vector<int> dims;
  bool symmetric = false;
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // (line number, tokens)
};

inline RawTensorFile read_raw(const std::string& text) {
  RawTensorFile raw;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto tok = split_ws(t);
    if (!have_header) {
      if (tok[0] != "dims") throw ParseError(lineno, "expected 'dims' header");
      std::size_t end = tok.size();
      if (end > 1 && tok.back() == "symmetric") {
        raw.symmetric = true;
        --end;
      }
      for (std::size_t q = 1; q < end; ++q) {
        int d = parse_int(tok[q], lineno);
        if (d < 1) throw ParseError(lineno, "dimensions must be positive");
        raw.dims.push_back(d);
      }
      if (raw.dims.size() < 3) throw ParseError(lineno, "header needs at least three dimensions");
      have_header = true;
      continue;
    }
    raw.rows.emplace_back(lineno, std::move(tok));
  }
  if (!have_header) throw ParseError(lineno, "missing 'dims' header");
  return raw;
}

}  // namespace detail

/// Parse the tensor text format:
///
///     # comment
///     dims n1 n2 n3 [symmetric]
///     i j k value        (1-based indices)
///
/// Symmetric files may list any one permutation of each index; the parsed
/// tensor is closed under permutations and conflicting values are rejected.
inline PartialTensor parse_tensor(const std::string& text) {
  auto raw = detail::read_raw(text);
  if (raw.dims.size() != 3) throw ParseError(1, "cubic tensor file needs exactly three dimensions");
  PartialTensor t({raw.dims[0], raw.dims[1], raw.dims[2]}, raw.symmetric);
  for (const auto& [lineno, tok] : raw.rows) {
    if (tok.size() != 4) throw ParseError(lineno, "expected 'i j k value'");
    Index3 idx;
    for (int m = 0; m < 3; ++m) {
      int v = detail::parse_int(tok[m], lineno);
      if (v < 1 || v > raw.dims[m]) throw ParseError(lineno, "index out of range");
      idx[m] = v - 1;
    }
    double value = detail::parse_double(tok[3], lineno);
    try {
      t.set(idx, value);
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return t;
}

inline std::string serialize_tensor(const PartialTensor& t) {
  std::ostringstream os;
  os << "dims " << t.dim(0) << ' ' << t.dim(1) << ' ' << t.dim(2);
  if (t.symmetric()) os << " symmetric";
  os << '\n';
  // symmetric tensors are written as listed; parsing restores the closure
  for (const auto& [idx, v] : t.listed_entries())
    os << idx[0] + 1 << ' ' << idx[1] + 1 << ' ' << idx[2] + 1 << ' ' << detail::format_double(v) << '\n';
  return os.str();
}

}  // namespace r1tc
