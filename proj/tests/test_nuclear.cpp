#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace r1tc;

TEST(Nuclear, RankOneInstanceReturnsTheKnownMatrix) {
  auto t = support::load("nuclear_rank1_4x4x4.txt");
  auto nr = solve_nuclear(t);
  ASSERT_TRUE(nr.result) << nr.message;
  Eigen::MatrixXd expect(4, 4);
  expect << 1, 1, 2, 1, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 1, 0.5;
  EXPECT_LE((nr.outcome.X - expect).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_EQ(nr.outcome.numerical_rank, 1);
  const auto& r = *nr.result;
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_TRUE(oracle::proportional(r.a, Eigen::Vector4d(1, 0.5, 0.5, 0.5), 1e-6));
  EXPECT_TRUE(oracle::proportional(r.b, Eigen::Vector4d(1, 1, 2, 1), 1e-6));
  EXPECT_TRUE(oracle::proportional(r.c, Eigen::Vector4d(2, 4, 2, 2), 1e-6));
}

TEST(Nuclear, NonuniqueInstanceHasRankThree) {
  auto t = support::load("nuclear_rank3_3x3x3.txt");
  auto nr = solve_nuclear(t);
  EXPECT_FALSE(nr.result);
  EXPECT_EQ(nr.outcome.numerical_rank, 3);
  const auto& s = nr.outcome.singular_values;
  ASSERT_EQ(s.size(), 3);
  EXPECT_GT(s[2] / s[0], 1e-3);
  EXPECT_NE(nr.message.find("rank_failure"), std::string::npos);
  // the optimum has singular values 1, 1/4, 1/4 and trace-norm 3/2
  EXPECT_NEAR(s[0], 1.0, 1e-5);
  EXPECT_NEAR(s[1], 0.25, 1e-5);
  EXPECT_NEAR(s[2], 0.25, 1e-5);
}

TEST(Nuclear, OptimalObjectiveEqualsTwiceTheNuclearNorm) {
  for (const char* name : {"nuclear_rank1_4x4x4.txt", "nuclear_rank3_3x3x3.txt"}) {
    auto nr = solve_nuclear(support::load(name));
    EXPECT_NEAR(nr.outcome.objective, 2.0 * nr.outcome.singular_values.sum(), 1e-5) << name;
  }
}

TEST(Nuclear, SymmetricSourcesDiffer) {
  auto t = support::load("symmetric_5x5x5.txt");
  NuclearOptions listed;
  auto nl = solve_nuclear_symmetric(t, listed);
  EXPECT_FALSE(nl.result);
  EXPECT_EQ(nl.outcome.numerical_rank, 3);

  NuclearOptions closed;
  closed.symmetric_source = SymmetricSource::closed;
  auto nc = solve_nuclear_symmetric(t, closed);
  ASSERT_TRUE(nc.result) << nc.message;
  ASSERT_TRUE(nc.result->symmetric);
  EXPECT_TRUE(oracle::proportional(nc.result->symmetric->v, (Eigen::VectorXd(5) << 1, 3, 4, 5, 2).finished(), 1e-6));
  EXPECT_LE(nc.result->residual, 1e-6);
}

TEST(Nuclear, RandomRankOneInstancesAtHighDensityComplete) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = observe(gen_rank1(4, 4, 4, seed), gen_omega({4, 4, 4}, 0.6, seed));
    auto nr = solve_nuclear(t);
    if (nr.result) {
      EXPECT_LE(residual(t, nr.result->a, nr.result->b, nr.result->c), 1e-6);
      ++ok;
    }
  }
  EXPECT_GE(ok, 8);
}

TEST(Nuclear, SdpShapeMatchesTheMinorSystem) {
  auto t = support::load("nuclear_rank1_4x4x4.txt");
  auto p = build_nuclear_sdp(t);
  EXPECT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.blocks[0].size, 8);
  EXPECT_EQ(p.num_vars, 8 * 9 / 2);
  // minor rows plus the anchor row
  EXPECT_EQ(p.equalities.size(), build_minors(t).rows.size() + 1);
  EXPECT_EQ(p.equalities.back().rhs, 1.0);
}
