// Completion of strongly rank-1 completable tensors: bipartite graph of the
// observed (i, j) pairs, ratio propagation for (a, b), least-squares c.
#pragma once

#include "r1tc/reduction.hpp"

#include <deque>
#include <set>

namespace r1tc {

struct BipartiteGraph {
  std::vector<int> left;   // rows appearing in the edge set (sorted)
  std::vector<int> right;  // columns appearing in the edge set (sorted)
  std::vector<Pair> edges;

  static BipartiteGraph from_edges(std::vector<Pair> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::set<int> l, r;
    for (const auto& e : edges) {
      l.insert(e[0]);
      r.insert(e[1]);
    }
    return {{l.begin(), l.end()}, {r.begin(), r.end()}, std::move(edges)};
  }
};

inline BipartiteGraph graph_of(const PartialTensor& t) {
  std::vector<Pair> e;
  for (const auto& [idx, v] : t.entries()) e.push_back({idx[0], idx[1]});
  return BipartiteGraph::from_edges(std::move(e));
}

namespace detail {

// Vertices are numbered rows first, then columns: row i -> i, column j -> n_rows + j.
struct Adjacency {
  int n_rows = 0;
  std::vector<std::vector<int>> nbr;
};

inline Adjacency adjacency(const BipartiteGraph& g) {
  Adjacency adj;
  int max_row = -1, max_col = -1;
  for (const auto& e : g.edges) {
    max_row = std::max(max_row, e[0]);
    max_col = std::max(max_col, e[1]);
  }
  adj.n_rows = max_row + 1;
  adj.nbr.resize(static_cast<std::size_t>(max_row + 1 + max_col + 1));
  for (const auto& e : g.edges) {
    adj.nbr[e[0]].push_back(adj.n_rows + e[1]);
    adj.nbr[adj.n_rows + e[1]].push_back(e[0]);
  }
  return adj;
}

}  // namespace detail

inline bool is_connected(const BipartiteGraph& g) {
  if (g.edges.empty()) return false;
  auto adj = detail::adjacency(g);
  std::vector<char> seen(adj.nbr.size(), 0);
  std::deque<int> queue{g.edges.front()[0]};
  seen[g.edges.front()[0]] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj.nbr[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
  }
  return reached == g.left.size() + g.right.size();
}

enum class TraversalSignal { ok, zero_edge, disconnected };

struct Traversal {
  Eigen::VectorXd a, b;
  TraversalSignal signal = TraversalSignal::ok;
};

enum class QueueOrder { fifo, lifo };

/// Breadth-first propagation of a_i b_j = w_ij from a_anchor = b_anchor = 1.
/// Each vertex is assigned exactly once; rows and columns outside the graph
/// stay zero.
inline Traversal iterative_complete(const StrongData& data, const BipartiteGraph& g, const Pair& anchor, int n1,
                                    int n2, double zero_tol = 1e-12, QueueOrder order = QueueOrder::fifo) {
  Traversal out;
  out.a = Eigen::VectorXd::Zero(n1);
  out.b = Eigen::VectorXd::Zero(n2);
  auto adj = detail::adjacency(g);
  const int nr = adj.n_rows;
  std::vector<char> seen(adj.nbr.size(), 0);
  std::deque<int> work{anchor[0], nr + anchor[1]};
  seen[anchor[0]] = seen[nr + anchor[1]] = 1;
  out.a[anchor[0]] = 1.0;
  out.b[anchor[1]] = 1.0;
  while (!work.empty()) {
    int u;
    if (order == QueueOrder::fifo) {
      u = work.front();
      work.pop_front();
    } else {
      u = work.back();
      work.pop_back();
    }
    bool is_row = u < nr;
    double val = is_row ? out.a[u] : out.b[u - nr];
    for (int v : adj.nbr[u]) {
      if (seen[v]) continue;
      if (std::abs(val) <= zero_tol) {
        out.signal = TraversalSignal::zero_edge;
        return out;
      }
      Pair e = is_row ? Pair{u, v - nr} : Pair{v, u - nr};
      double w = data.w.at(e);
      if (is_row)
        out.b[v - nr] = w / val;
      else
        out.a[v] = w / val;
      seen[v] = 1;
      work.push_back(v);
    }
  }
  for (int r : g.left)
    if (!seen[r]) out.signal = TraversalSignal::disconnected;
  for (int c : g.right)
    if (!seen[nr + c]) out.signal = TraversalSignal::disconnected;
  return out;
}

struct BackSolve {
  Eigen::VectorXd c;
  std::vector<bool> determined;
  bool feasible = true;
  int failing_slice = -1;
};

/// Per slice k, least-squares c_k for r = c_k u with u_s = a_i b_j and
/// r_s = A_ijk. Slices with a vanishing coefficient vector take c_k = 0 when
/// their data vanish too, and are infeasible otherwise.
inline BackSolve back_solve_c(const PartialTensor& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              double tol = 1e-6) {
  BackSolve out;
  out.c = Eigen::VectorXd::Zero(t.dim(2));
  out.determined.assign(t.dim(2), false);
  for (const auto& g : slice_groups(t)) {
    const auto m = static_cast<Eigen::Index>(g.members.size());
    Eigen::VectorXd u(m), r(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      u[s] = a[g.members[s][0]] * b[g.members[s][1]];
      r[s] = g.values[s];
    }
    double rmax = r.cwiseAbs().maxCoeff();
    if (u.norm() > tol) {
      double ck = u.dot(r) / u.squaredNorm();
      out.c[g.k] = ck;
      out.determined[g.k] = true;
      if ((r - ck * u).cwiseAbs().maxCoeff() > tol * std::max(1.0, rmax)) {
        out.feasible = false;
        if (out.failing_slice < 0) out.failing_slice = g.k;
      }
    } else if (rmax > tol) {
      out.feasible = false;
      if (out.failing_slice < 0) out.failing_slice = g.k;
    }
  }
  return out;
}

enum class StrongSignal { none, not_strong, anchor_coordinate_zero, zero_edge, disconnected, infeasible_c };

inline const char* to_string(StrongSignal s) {
  switch (s) {
    case StrongSignal::none: return "none";
    case StrongSignal::not_strong: return "not_strong";
    case StrongSignal::anchor_coordinate_zero: return "anchor_coordinate_zero";
    case StrongSignal::zero_edge: return "zero_edge";
    case StrongSignal::disconnected: return "disconnected";
    case StrongSignal::infeasible_c: return "infeasible_c";
  }
  return "?";
}

struct StrongOptions {
  double nullspace_tol = 1e-8;
  double feas_tol = 1e-6;
};

struct StrongCompletion {
  std::optional<CompletionResult> result;
  StrongSignal signal = StrongSignal::none;
  int nullspace_dim = 0;
  bool connected = false;
};

/// strong_data -> graph traversal -> back-solve for c. Any step that cannot
/// proceed surfaces a signal so the caller can fall back to a relaxation.
inline StrongCompletion complete_strong(const PartialTensor& t, const StrongOptions& opt = {}) {
  StrongCompletion out;
  auto anchor = anchor_index(t);
  if (anchor.all_zero()) {
    out.result = zero_completion(t, Method::iterative);
    return out;
  }
  auto sd = strong_data(t, opt.nullspace_tol);
  out.nullspace_dim = sd.nullspace_dim;
  auto graph = graph_of(t);
  out.connected = is_connected(graph);
  if (sd.check == StrongCheck::dimension_not_one) {
    out.signal = StrongSignal::not_strong;
    return out;
  }
  if (sd.check == StrongCheck::anchor_coordinate_zero) {
    out.signal = StrongSignal::anchor_coordinate_zero;
    return out;
  }
  if (!out.connected) {
    out.signal = StrongSignal::disconnected;
    return out;
  }
  auto trav = iterative_complete(*sd.data, graph, {anchor.index[0], anchor.index[1]}, t.dim(0), t.dim(1));
  if (trav.signal == TraversalSignal::zero_edge) {
    out.signal = StrongSignal::zero_edge;
    return out;
  }
  if (trav.signal == TraversalSignal::disconnected) {
    out.signal = StrongSignal::disconnected;
    return out;
  }
  auto bs = back_solve_c(t, trav.a, trav.b, opt.feas_tol);
  if (!bs.feasible) {
    out.signal = StrongSignal::infeasible_c;
    return out;
  }
  CompletionResult r;
  if (t.symmetric()) {
    r = symmetric_from_direction(t, trav.a, Method::iterative, opt.feas_tol);
    if (r.status != Status::completed) {
      out.signal = StrongSignal::infeasible_c;
      return out;
    }
  } else {
    r.a = trav.a;
    r.b = trav.b;
    r.c = bs.c;
    r.method = Method::iterative;
    r.residual = residual(t, r.a, r.b, r.c);
    r.status = r.residual <= opt.feas_tol ? Status::completed : Status::inconclusive;
    r.c_determined = bs.determined;
    if (r.status != Status::completed) {
      out.signal = StrongSignal::infeasible_c;
      return out;
    }
  }
  out.result = std::move(r);
  return out;
}

}  // namespace r1tc
