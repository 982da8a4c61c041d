#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace r1tc;

namespace {

/// Position of an exponent by linear search.
int find_exponent(const MonomialBasis& basis, const Exponent& e) {
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i] == e) return static_cast<int>(i);
  return -1;
}

double monomial(const Eigen::VectorXd& x, const Exponent& e) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i) v *= std::pow(x[static_cast<Eigen::Index>(i)], e[i]);
  return v;
}

/// Moments of the Dirac measure at x.
Eigen::VectorXd point_moments(const MonomialBasis& basis, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) y[static_cast<Eigen::Index>(i)] = monomial(x, basis[i]);
  return y;
}

double pair_row(const sdp::EqualityRow& row, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (const auto& [i, c] : row.coeffs) s += c * y[i];
  return s;
}

/// Anchored coordinates of a completion in the system's variables.
Eigen::VectorXd anchored_point(const PolynomialSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n_bar);
  const double ai = a[sys.anchor[0]], bj = b[sys.anchor[1]];
  for (std::size_t i = 0; i < sys.a_var.size(); ++i)
    if (sys.a_var[i] >= 0) x[sys.a_var[i]] = a[static_cast<Eigen::Index>(i)] / ai;
  for (std::size_t j = 0; j < sys.b_var.size(); ++j)
    if (sys.b_var[j] >= 0) x[sys.b_var[j]] = b[static_cast<Eigen::Index>(j)] / bj;
  return x;
}

long count_minor_pairs(const PartialTensor& t) {
  std::map<int, int> per_slice;
  for (const auto& [idx, v] : t.entries()) ++per_slice[idx[2]];
  long s = 0;
  for (const auto& [k, m] : per_slice) s += oracle::binomial(m, 2);
  return s;
}

}  // namespace

TEST(Moment, BasisIsGradedLexDescending) {
  MonomialBasis b(2, 2);
  std::vector<Exponent> expect{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(b.exponents(), expect);
  MonomialBasis c(3, 2);
  EXPECT_EQ(c[4], (Exponent{2, 0, 0}));
  EXPECT_EQ(c[5], (Exponent{1, 1, 0}));
  EXPECT_EQ(c[9], (Exponent{0, 0, 2}));
}

TEST(Moment, BasisSizesAreBinomials) {
  for (int n = 1; n <= 6; ++n)
    for (int d = 0; d <= 4; ++d) {
      MonomialBasis b(n, d);
      EXPECT_EQ(static_cast<long>(b.size()), oracle::binomial(n + d, d));
      for (int k = 0; k <= d; ++k) EXPECT_EQ(static_cast<long>(b.count_upto(k)), oracle::binomial(n + k, k));
      for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b.index(b[i]), static_cast<int>(i));
    }
  MonomialBasis b(2, 2);
  EXPECT_EQ(b.index({2, 1}), -1);
}

TEST(Moment, MomentMatrixIndexing) {
  auto sys = build_system(support::load("nuclear_rank3_3x3x3.txt"), 0);
  for (int level = 1; level <= 2; ++level) {
    auto mr = build_moment_sdp(sys, level);
    MonomialBasis lower(sys.n_bar, level);
    ASSERT_EQ(mr.moment_side, lower.size());
    std::mt19937_64 rng(level);
    std::normal_distribution<double> nd;
    Eigen::VectorXd y(static_cast<Eigen::Index>(mr.y_dim()));
    for (auto& v : y) v = nd(rng);
    auto M = mr.moment_matrix(y, mr.moment_side);
    for (std::size_t p = 0; p < lower.size(); ++p)
      for (std::size_t q = 0; q < lower.size(); ++q) {
        Exponent e = lower[p];
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += lower[q][i];
        EXPECT_EQ(M(p, q), y[find_exponent(mr.basis, e)]);
      }
    // the LMI block evaluates to the same matrix
    EXPECT_LE((sdp::block_value(mr.problem.blocks[0], y) - M).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Moment, LocalizerMatchesSymbolicPairing) {
  for (const char* name : {"nuclear_rank3_3x3x3.txt", "symmetric_5x5x5.txt"}) {
    auto t = support::load(name);
    for (auto form : {Formulation::minors, Formulation::slice_scaled}) {
      if (form == Formulation::slice_scaled && t.symmetric()) continue;
      auto sys = build_system(t, 3, SymmetricSource::listed, form);
      if (sys.n_bar > 10) continue;
      auto mr = build_moment_sdp(sys, 2);
      std::mt19937_64 rng(7);
      std::normal_distribution<double> nd;
      Eigen::VectorXd y(static_cast<Eigen::Index>(mr.y_dim()));
      for (auto& v : y) v = nd(rng);
      ASSERT_EQ(mr.localizers.size(), sys.phi.size());
      for (std::size_t k = 0; k < sys.phi.size(); ++k) {
        const auto& phi = sys.phi[k];
        int s = 4 - phi.degree();
        MonomialBasis shifts(sys.n_bar, s);
        ASSERT_EQ(mr.localizers[k].size(), shifts.size());
        for (std::size_t g = 0; g < shifts.size(); ++g) {
          // phi * x^gamma expanded term by term, then paired with y
          std::map<Exponent, double> prod;
          for (const auto& [e, c] : phi.terms) {
            Exponent f = e;
            for (std::size_t i = 0; i < f.size(); ++i) f[i] += shifts[g][i];
            prod[f] += c;
          }
          double symbolic = 0.0;
          for (const auto& [e, c] : prod) symbolic += c * y[find_exponent(mr.basis, e)];
          EXPECT_LE(std::abs(symbolic - pair_row(mr.localizers[k][g], y)), 1e-12);
        }
      }
    }
  }
}

TEST(Moment, LocalizerRowsOfOneMinusProduct) {
  PolynomialSystem sys;
  sys.n_bar = 2;
  Polynomial h;
  h.add({0, 0}, 1.0);
  h.add({1, 1}, -1.0);
  sys.phi.push_back(h);
  sys.f.add({2, 0}, 1.0);
  sys.f.add({0, 2}, 1.0);
  auto mr = build_moment_sdp(sys, 2);
  ASSERT_EQ(mr.localizers[0].size(), 6u);  // all gamma with |gamma| <= 2
  for (std::size_t g = 0; g < 6; ++g) {
    Exponent shifted = mr.basis[g];
    shifted[0] += 1;
    shifted[1] += 1;
    std::map<int, double> expect{{static_cast<int>(g), 1.0}, {find_exponent(mr.basis, shifted), -1.0}};
    std::map<int, double> got;
    for (const auto& [i, c] : mr.localizers[0][g].coeffs) got[i] += c;
    EXPECT_EQ(got, expect);
    EXPECT_EQ(mr.localizers[0][g].rhs, 0.0);
  }
  // y_0 = 1 is the first equality
  EXPECT_EQ(mr.problem.equalities[0].coeffs, (std::vector<std::pair<int, double>>{{0, 1.0}}));
  EXPECT_EQ(mr.problem.equalities[0].rhs, 1.0);

  // min x1^2 + x2^2 on x1 x2 = 1 is 2, attained at +-(1, 1)
  auto sol = sdp::solve(mr.problem);
  ASSERT_EQ(sol.status, sdp::SdpStatus::optimal);
  EXPECT_NEAR(sol.primal_obj, 2.0, 1e-6);
}

TEST(Moment, SingleVariableSquareHasClosedFormOptimum) {
  // min x^2 subject to x - 2 = 0
  PolynomialSystem sys;
  sys.n_bar = 1;
  Polynomial phi;
  phi.add({1}, 1.0);
  phi.add({0}, -2.0);
  sys.phi.push_back(phi);
  sys.f.add({2}, 1.0);
  auto mr = build_moment_sdp(sys, 1);
  EXPECT_EQ(mr.y_dim(), 3u);
  EXPECT_EQ(mr.moment_side, 2u);
  auto sol = sdp::solve(mr.problem);
  ASSERT_EQ(sol.status, sdp::SdpStatus::optimal);
  EXPECT_NEAR(sol.primal_obj, 4.0, 1e-6);
  EXPECT_NEAR(sol.y[1], 2.0, 1e-6);
  EXPECT_EQ(flat_truncation_rank1(sol.y, mr), std::optional<int>(1));
}

TEST(Moment, PointMassIsFeasibleWithMatchingObjective) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto f = gen_rank1(3, 3, 3, seed);
    auto t = observe(f, gen_omega({3, 3, 3}, 0.3, seed));
    auto sys = build_system(t, seed);
    auto x = anchored_point(sys, f.a, f.b);
    auto mr = build_moment_sdp(sys, 1);
    auto y = point_moments(mr.basis, x);
    for (const auto& row : mr.problem.equalities)
      EXPECT_LE(std::abs(pair_row(row, y) - row.rhs), 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mr.moment_matrix(y, mr.moment_side));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
    EXPECT_NEAR(mr.objective_vector.dot(y), sys.f.eval(x), 1e-9 * std::abs(sys.f.eval(x)));
    EXPECT_EQ(flat_truncation_rank1(y, mr), std::optional<int>(1));

    auto r = extract_and_verify(y, sys, t);
    ASSERT_TRUE(r);
    std::vector<std::array<int, 3>> idx;
    for (const auto& [i, v] : t.entries()) idx.push_back(i);
    EXPECT_LE(oracle::product_mismatch(r->a, r->b, r->c, f.a, f.b, f.c, idx), 1e-8);
    EXPECT_LE(r->residual, 1e-8);
  }
}

TEST(Moment, FlatTruncationRejectsMixtures) {
  MonomialBasis basis(2, 2);
  PolynomialSystem sys;
  sys.n_bar = 2;
  auto mr = build_moment_sdp(sys, 1);
  Eigen::VectorXd y = 0.5 * point_moments(mr.basis, Eigen::Vector2d(1, 2)) +
                      0.5 * point_moments(mr.basis, Eigen::Vector2d(-1, 0.5));
  EXPECT_FALSE(flat_truncation_rank1(y, mr));
  EXPECT_EQ(flat_truncation_rank1(point_moments(mr.basis, Eigen::Vector2d(3, -1)), mr), std::optional<int>(1));
}

TEST(Moment, FiveByFiveSystemShape) {
  auto t = support::load("moment_5x5x5.txt");
  auto sys = build_system(t, 0);
  EXPECT_EQ(sys.n_bar, 8);
  EXPECT_EQ(static_cast<long>(sys.phi.size()), count_minor_pairs(t));
  // minors through the anchor row or column lose a degree
  for (const auto& phi : sys.phi) {
    EXPECT_GE(phi.degree(), 1);
    EXPECT_LE(phi.degree(), 2);
  }
  EXPECT_FALSE(sys.trivially_infeasible);
}

TEST(Moment, OneEntryPerSliceHasNoConstraints) {
  PartialTensor t({3, 3, 3});
  t.set({0, 0, 0}, 2.0);
  t.set({1, 2, 1}, -1.0);
  t.set({2, 1, 2}, 0.5);
  auto sys = build_system(t, 0);
  EXPECT_TRUE(sys.phi.empty());
  auto mr = solve_moment(t);
  EXPECT_EQ(mr.result.status, Status::completed);
  EXPECT_LE(residual(t, mr.result.a, mr.result.b, mr.result.c), 1e-6);
}

TEST(Moment, InfeasibleInstanceHasNoCompletion) {
  auto t = support::load("infeasible_2x2x1.txt");
  MomentOptions opt;
  opt.max_level = 3;
  auto mr = solve_moment(t, opt);
  EXPECT_EQ(mr.result.status, Status::no_completion);
  EXPECT_NE(mr.result.message.find("certified infeasible (numerical)"), std::string::npos);
  ASSERT_FALSE(mr.levels.empty());
  EXPECT_LE(mr.levels.back().level, 3);
}

TEST(Moment, SameSeedSameResult) {
  auto t = support::load("nuclear_rank3_3x3x3.txt");
  MomentOptions opt;
  opt.seed = 11;
  auto r1 = solve_moment(t, opt), r2 = solve_moment(t, opt);
  ASSERT_EQ(r1.result.status, Status::completed);
  EXPECT_EQ(r1.result.a, r2.result.a);
  EXPECT_EQ(r1.result.b, r2.result.b);
  EXPECT_EQ(r1.result.c, r2.result.c);
  EXPECT_EQ(build_system(t, 11).objective_F, build_system(t, 11).objective_F);
  EXPECT_NE(build_system(t, 11).objective_F, build_system(t, 12).objective_F);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_system(t, 11).objective_F);
  EXPECT_GE(es.eigenvalues().minCoeff(), 1.0 - 1e-9);
}

TEST(Moment, AgreesWithTheIterativeMethodOnStrongInstances) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto t = gen_strong_instance(3, seed);
    auto it = complete_strong(t);
    ASSERT_TRUE(it.result);
    auto mr = solve_moment(t);
    ASSERT_EQ(mr.result.status, Status::completed) << mr.result.message;
    // strong completability fixes a_i b_j on observed pairs and c on observed slices
    std::vector<std::array<int, 3>> idx;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (const auto& g : slice_groups(t)) idx.push_back({i, j, g.k});
    EXPECT_LE(oracle::product_mismatch(mr.result.a, mr.result.b, mr.result.c, it.result->a, it.result->b,
                                       it.result->c, idx),
              1e-6);
  }
}

TEST(Moment, NonuniqueInstanceCompletes) {
  auto t = support::load("nuclear_rank3_3x3x3.txt");
  auto mr = solve_moment(t);
  ASSERT_EQ(mr.result.status, Status::completed) << mr.result.message;
  EXPECT_LE(residual(t, mr.result.a, mr.result.b, mr.result.c), 1e-6);
}

TEST(Moment, SymmetricInstanceCompletes) {
  auto t = support::load("symmetric_5x5x5.txt");
  auto mr = solve_moment(t);
  ASSERT_EQ(mr.result.status, Status::completed) << mr.result.message;
  ASSERT_TRUE(mr.result.symmetric);
  EXPECT_TRUE(oracle::proportional(mr.result.symmetric->v, (Eigen::VectorXd(5) << 1, 3, 4, 5, 2).finished(), 1e-6));
  EXPECT_LE(residual(t, mr.result.a, mr.result.b, mr.result.c), 1e-6);
}

TEST(Moment, SliceScaledPointsAreExactlyCompletions) {
  auto t = support::load("moment_5x5x5.txt");
  auto sys = build_system(t, 0, SymmetricSource::listed, Formulation::slice_scaled);
  Eigen::VectorXd a(5), b(5), c(5);
  a << 1, 2, 3, 1, 1;
  b << 1, 1.0 / 3, 1.0 / 3, 2.0 / 3, 1.0 / 3;
  c << 3, 3, 0, 6, 0;
  ASSERT_LE(residual(t, a, b, c), 1e-12);
  Eigen::VectorXd x = anchored_point(sys, a, b);
  // mu_k = c_anchor / c_k
  for (int k = 0; k < 5; ++k)
    if (sys.mu_var[k] >= 0) {
      double mu = c[sys.anchor[2]] / c[k];
      x[sys.mu_var[k]] = mu;
      x[sys.nu_var[k]] = 1.0 / mu;
    }
  for (const auto& phi : sys.phi) EXPECT_LE(std::abs(phi.eval(x)), 1e-12);
}
