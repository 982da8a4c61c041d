// Seeded instance generators and the experiment runner.
#pragma once

#include "r1tc/pipeline.hpp"

#include <numeric>

namespace r1tc {

/// Independent random stream for (seed, purpose).
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

/// Uniform on [-1, 1] with magnitudes below 0.1 rejected.
inline double draw_factor_entry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    double v = u(rng);
    if (std::abs(v) >= 0.1) return v;
  }
}

struct Rank1Factors {
  Eigen::VectorXd a, b, c;
  double value(const Index3& idx) const { return a[idx[0]] * b[idx[1]] * c[idx[2]]; }
};

inline Rank1Factors gen_rank1(int n1, int n2, int n3, std::uint64_t seed) {
  auto rng = seeded_rng(seed, 1);
  Rank1Factors f{Eigen::VectorXd(n1), Eigen::VectorXd(n2), Eigen::VectorXd(n3)};
  for (auto* v : {&f.a, &f.b, &f.c})
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = draw_factor_entry(rng);
  return f;
}

/// v with a = b = c = v.
inline Rank1Factors gen_rank1_symmetric(int n, std::uint64_t seed) {
  auto rng = seeded_rng(seed, 2);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = draw_factor_entry(rng);
  return {v, v, v};
}

/// ceil(density * n1 n2 n3) distinct triples, uniformly without replacement,
/// in lexicographic order. Symmetric mode draws unordered triples and adds
/// each with all its permutations until the target count is reached.
inline std::vector<Index3> gen_omega(std::array<int, 3> dims, double density, std::uint64_t seed,
                                     bool symmetric = false) {
  if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("density must lie in (0, 1]");
  const long total = static_cast<long>(dims[0]) * dims[1] * dims[2];
  const auto target = static_cast<std::size_t>(std::ceil(density * static_cast<double>(total) - 1e-9));
  auto rng = seeded_rng(seed, 3);
  std::vector<Index3> out;
  if (!symmetric) {
    std::vector<long> ids(static_cast<std::size_t>(total));
    std::iota(ids.begin(), ids.end(), 0L);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t q = 0; q < target; ++q) {
      long id = ids[q];
      out.push_back({static_cast<int>(id / (dims[1] * dims[2])), static_cast<int>(id / dims[2] % dims[1]),
                     static_cast<int>(id % dims[2])});
    }
  } else {
    if (!(dims[0] == dims[1] && dims[1] == dims[2])) throw std::invalid_argument("symmetric sampling needs n1 = n2 = n3");
    const int n = dims[0];
    std::vector<Index3> sorted;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) sorted.push_back({i, j, k});
    std::shuffle(sorted.begin(), sorted.end(), rng);
    std::set<Index3> closed;
    for (const auto& s : sorted) {
      if (closed.size() >= target) break;
      Index3 p = s;
      do closed.insert(p);
      while (std::next_permutation(p.begin(), p.end()));
    }
    out.assign(closed.begin(), closed.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline PartialTensor observe(const Rank1Factors& f, const std::vector<Index3>& omega, bool symmetric = false) {
  const auto n1 = static_cast<int>(f.a.size()), n2 = static_cast<int>(f.b.size()), n3 = static_cast<int>(f.c.size());
  PartialTensor t({n1, n2, n3}, symmetric);
  for (const auto& idx : omega) {
    Index3 key = idx;
    if (symmetric) std::sort(key.begin(), key.end());  // one rounding for every permutation
    t.set(idx, f.value(key));
  }
  return t;
}

/// Strongly completable instance: two interleaved chains of (i, j) pairs
/// through random orderings of rows and columns, one random slice per pair,
/// then extra random triples on those pairs until the minor nullspace is
/// one-dimensional.
inline PartialTensor gen_strong_instance(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("strong instances need n >= 2");
  auto rng = seeded_rng(seed, 4);
  std::vector<int> rows(n), cols(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::shuffle(cols.begin(), cols.end(), rng);
  std::vector<Pair> pairs{{rows[0], cols[0]}};
  for (int m = 1; m < n; ++m) {
    pairs.push_back({rows[m], cols[m - 1]});
    pairs.push_back({rows[m - 1], cols[m]});
  }
  auto f = gen_rank1(n, n, n, seed);
  std::uniform_int_distribution<int> slice(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  PartialTensor t({n, n, n});
  for (const auto& p : pairs) {
    Index3 idx{p[0], p[1], slice(rng)};
    t.set(idx, f.value(idx));
  }
  while (nullspace(build_minors(t)).dim > 1) {
    Index3 idx;
    do {
      auto p = pairs[pick(rng)];
      idx = {p[0], p[1], slice(rng)};
    } while (t.contains(idx));
    t.set(idx, f.value(idx));
  }
  return t;
}

enum class ExperimentMode { nuclear, nuclear_symmetric, iterative_strong, moment };

inline const char* to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::nuclear: return "nuclear";
    case ExperimentMode::nuclear_symmetric: return "nuclear_symmetric";
    case ExperimentMode::iterative_strong: return "iterative_strong";
    case ExperimentMode::moment: return "moment";
  }
  return "?";
}

inline ExperimentMode parse_experiment_mode(const std::string& s) {
  for (auto m : {ExperimentMode::nuclear, ExperimentMode::nuclear_symmetric, ExperimentMode::iterative_strong,
                 ExperimentMode::moment})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown experiment mode '" + s + "'");
}

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::nuclear;
  int n = 5;
  double density = 0.37;  // ignored by iterative_strong
  int trials = 20;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  double rank_tol = 1e-6;
  int max_level = 4;

  void validate() const {
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (mode != ExperimentMode::iterative_strong && !(density > 0.0 && density <= 1.0))
      throw std::invalid_argument("density must lie in (0, 1]");
    if (mode == ExperimentMode::iterative_strong && n < 2) throw std::invalid_argument("strong instances need n >= 2");
  }
};

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::size_t omega_size = 0;
  Status status = Status::inconclusive;
  double residual = std::numeric_limits<double>::infinity();
  bool success = false;
  double seconds = 0.0;
  std::string message;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  double success_rate = 0.0;
  double mean_seconds = 0.0;
  double den = 0.0;  // mean |Omega| / n^3
  double rho = 0.0;  // mean |Omega| / (3n - 1)
};

/// Instance of trial `seed` for the given mode.
inline PartialTensor experiment_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  const int n = cfg.n;
  switch (cfg.mode) {
    case ExperimentMode::iterative_strong: return gen_strong_instance(n, seed);
    case ExperimentMode::nuclear_symmetric:
      return observe(gen_rank1_symmetric(n, seed), gen_omega({n, n, n}, cfg.density, seed, true), true);
    default: return observe(gen_rank1(n, n, n, seed), gen_omega({n, n, n}, cfg.density, seed));
  }
}

/// Trials use seeds seed, seed + 1, ...; success means status completed and
/// a residual recomputed here from the returned factors within tol.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.config = cfg;
  double omega_sum = 0.0, time_sum = 0.0;
  int successes = 0;
  for (int i = 0; i < cfg.trials; ++i) {
    TrialRecord tr;
    tr.index = i;
    tr.seed = cfg.seed + static_cast<std::uint64_t>(i);
    auto t = experiment_instance(cfg, tr.seed);
    tr.omega_size = t.size();
    auto t0 = std::chrono::steady_clock::now();
    CompletionResult r;
    try {
      switch (cfg.mode) {
        case ExperimentMode::iterative_strong: {
          auto sc = complete_strong(t, StrongOptions{1e-8, cfg.tol});
          if (sc.result) r = *sc.result;
          else r.message = to_string(sc.signal);
          break;
        }
        case ExperimentMode::nuclear:
        case ExperimentMode::nuclear_symmetric: {
          NuclearOptions no;
          no.rank_tol = cfg.rank_tol;
          no.feas_tol = cfg.tol;
          auto nr = t.symmetric() ? solve_nuclear_symmetric(t, no) : solve_nuclear(t, no);
          if (nr.result) r = *nr.result;
          else r.message = nr.message;
          break;
        }
        case ExperimentMode::moment: {
          MomentOptions mo;
          mo.seed = tr.seed;
          mo.max_level = cfg.max_level;
          mo.tol = cfg.tol;
          mo.rank_tol = cfg.rank_tol;
          r = solve_moment(t, mo).result;
          break;
        }
      }
    } catch (const std::exception& e) {
      r.status = Status::inconclusive;
      r.message = e.what();
    }
    tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    tr.status = r.status;
    tr.message = r.message;
    if (r.status == Status::completed && r.a.size() == t.dim(0) && r.b.size() == t.dim(1) && r.c.size() == t.dim(2))
      tr.residual = residual(t, r.a, r.b, r.c);
    tr.success = r.status == Status::completed && tr.residual <= cfg.tol;
    successes += tr.success;
    omega_sum += static_cast<double>(tr.omega_size);
    time_sum += tr.seconds;
    rep.trials.push_back(std::move(tr));
  }
  const double n = cfg.n, trials = cfg.trials;
  rep.success_rate = successes / trials;
  rep.mean_seconds = time_sum / trials;
  rep.den = omega_sum / trials / (n * n * n);
  rep.rho = omega_sum / trials / (3.0 * n - 1.0);
  return rep;
}

}  // namespace r1tc
