#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace r1tc;

TEST(Strong, StrongInstanceRecoversKnownFactors) {
  auto t = support::load("strong_3x3x3.txt");
  auto sc = complete_strong(t);
  ASSERT_TRUE(sc.result);
  const auto& r = *sc.result;
  EXPECT_EQ(r.status, Status::completed);
  EXPECT_EQ(r.method, Method::iterative);
  // anchor (1,1,1) fixes a_1 = b_1 = 1, so the factors are exact
  EXPECT_LE((r.a - Eigen::Vector3d(1, -1, 1)).norm(), 1e-12);
  EXPECT_LE((r.b - Eigen::Vector3d(1, -1, -1)).norm(), 1e-12);
  EXPECT_LE((r.c - Eigen::Vector3d(-1, -1, 1)).norm(), 1e-12);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(residual(t, r.a, r.b, r.c), 1e-10);
}

TEST(Strong, QueueOrderDoesNotChangeTheFactors) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = gen_strong_instance(8, seed);
    auto sd = strong_data(t);
    ASSERT_EQ(sd.check, StrongCheck::strong);
    auto a = anchor_index(t);
    auto g = graph_of(t);
    auto fifo = iterative_complete(*sd.data, g, {a.index[0], a.index[1]}, 8, 8, 1e-12, QueueOrder::fifo);
    auto lifo = iterative_complete(*sd.data, g, {a.index[0], a.index[1]}, 8, 8, 1e-12, QueueOrder::lifo);
    EXPECT_LE((fifo.a - lifo.a).norm(), 1e-9 * fifo.a.norm());
    EXPECT_LE((fifo.b - lifo.b).norm(), 1e-9 * fifo.b.norm());
  }
}

TEST(Strong, GeneratedInstancesCompleteExactly) {
  for (int n : {2, 3, 5, 10}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto t = gen_strong_instance(n, seed);
      auto sc = complete_strong(t);
      ASSERT_TRUE(sc.result) << "n " << n << " seed " << seed << ": " << to_string(sc.signal);
      EXPECT_LE(residual(t, sc.result->a, sc.result->b, sc.result->c), 1e-10);
      // the generating factors reproduce the same tensor on the observed set
      auto f = gen_rank1(n, n, n, seed);
      std::vector<std::array<int, 3>> idx;
      for (const auto& [i, v] : t.entries()) idx.push_back(i);
      EXPECT_LE(oracle::product_mismatch(sc.result->a, sc.result->b, sc.result->c, f.a, f.b, f.c, idx), 1e-10);
    }
  }
}

TEST(Strong, NotStrongWhenTheNullspaceIsLarger) {
  auto sc = complete_strong(support::load("nuclear_rank3_3x3x3.txt"));
  EXPECT_FALSE(sc.result);
  EXPECT_EQ(sc.signal, StrongSignal::not_strong);
  EXPECT_GT(sc.nullspace_dim, 1);
}

TEST(Strong, DisconnectedGraphIsSignalled) {
  PartialTensor t({2, 2, 1});
  t.set({0, 0, 0}, 2.0);
  t.set({1, 1, 0}, 1.0);
  auto sc = complete_strong(t);
  EXPECT_EQ(sc.nullspace_dim, 1);
  EXPECT_FALSE(sc.connected);
  EXPECT_EQ(sc.signal, StrongSignal::disconnected);
}

TEST(Strong, ZeroEdgeIsSignalled) {
  // X_12 = 0 is forced, and a_2 is reachable only through b_2
  PartialTensor t({2, 2, 1});
  t.set({0, 0, 0}, 1.0);
  t.set({0, 1, 0}, 0.0);
  t.set({1, 1, 0}, 1.0);
  auto sc = complete_strong(t);
  EXPECT_EQ(sc.nullspace_dim, 1);
  EXPECT_EQ(sc.signal, StrongSignal::zero_edge);
}

TEST(Strong, AnchorCoordinateZeroIsSignalled) {
  // both slices force X_11 = X_12 = 0; only X_21 is free
  PartialTensor t({2, 2, 3});
  t.set({0, 0, 0}, 2.0);
  t.set({0, 1, 0}, 1.0);
  t.set({0, 0, 1}, 1.0);
  t.set({0, 1, 1}, 1.0);
  t.set({1, 0, 2}, 1.0);
  auto sc = complete_strong(t);
  EXPECT_EQ(sc.nullspace_dim, 1);
  EXPECT_EQ(sc.signal, StrongSignal::anchor_coordinate_zero);
}

TEST(Strong, AllZeroDataGivesTheZeroCompletion) {
  PartialTensor t({2, 3, 2});
  t.set({0, 0, 0}, 0.0);
  t.set({1, 2, 1}, 0.0);
  auto sc = complete_strong(t);
  ASSERT_TRUE(sc.result);
  EXPECT_EQ(sc.result->status, Status::completed);
  EXPECT_EQ(residual(t, sc.result->a, sc.result->b, sc.result->c), 0.0);
}

TEST(Strong, BackSolveFlagsInconsistentSlices) {
  PartialTensor t({2, 2, 1});
  t.set({0, 0, 0}, 1.0);
  t.set({1, 1, 0}, 3.0);
  Eigen::Vector2d a(1, 1), b(1, 1);
  auto bs = back_solve_c(t, a, b);
  EXPECT_FALSE(bs.feasible);
  EXPECT_EQ(bs.failing_slice, 0);
  b << 1, 3;
  a << 1, 1;
  bs = back_solve_c(t, a, b);
  EXPECT_TRUE(bs.feasible);
  EXPECT_DOUBLE_EQ(bs.c[0], 1.0);
}

TEST(Strong, SymmetricInstanceGivesSymmetricFactors) {
  auto f = gen_rank1_symmetric(4, 3);
  PartialTensor t({4, 4, 4}, true);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) t.set({i, j, j}, f.value({i, j, j}));
  t.set({0, 1, 2}, f.value({0, 1, 2}));
  auto sc = complete_strong(t);
  ASSERT_TRUE(sc.result) << to_string(sc.signal);
  ASSERT_TRUE(sc.result->symmetric);
  const auto& s = *sc.result->symmetric;
  EXPECT_TRUE(oracle::proportional(s.v, f.a, 1e-9));
  EXPECT_LE(sc.result->residual, 1e-10);
}
