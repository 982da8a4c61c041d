#include "support.hpp"

#include <gtest/gtest.h>

using namespace r1tc;

TEST(TensorModel, RoundTripIsIdentity) {
  for (const char* name : {"strong_3x3x3.txt", "nuclear_rank1_4x4x4.txt", "moment_5x5x5.txt", "symmetric_5x5x5.txt"}) {
    auto t = support::load(name);
    auto text = serialize_tensor(t);
    auto back = parse_tensor(text);
    EXPECT_EQ(back.dims(), t.dims()) << name;
    EXPECT_EQ(back.symmetric(), t.symmetric()) << name;
    EXPECT_EQ(back.entries(), t.entries()) << name;
    EXPECT_EQ(serialize_tensor(back), text) << name;
  }
}

TEST(TensorModel, RoundTripKeepsAwkwardValuesExactly) {
  PartialTensor t({2, 3, 4});
  t.set({0, 0, 0}, 0.1);
  t.set({1, 2, 3}, -1.0 / 3.0);
  t.set({0, 1, 2}, 1e-300);
  t.set({1, 0, 1}, 123456789.123456789);
  auto back = parse_tensor(serialize_tensor(t));
  EXPECT_EQ(back.entries(), t.entries());
}

TEST(TensorModel, AnchorIsLargestMagnitudeFirstInLexOrder) {
  auto t = support::load("nuclear_rank1_4x4x4.txt");
  auto a = anchor_index(t);
  // three entries tie at 4; (1,1,2) comes first lexicographically
  EXPECT_EQ(a.index, (Index3{0, 0, 1}));
  EXPECT_EQ(a.value, 4.0);

  PartialTensor neg({2, 2, 2});
  neg.set({1, 1, 1}, -5.0);
  neg.set({0, 0, 0}, 4.0);
  EXPECT_EQ(anchor_index(neg).index, (Index3{1, 1, 1}));
  EXPECT_EQ(anchor_index(neg).value, -5.0);
}

TEST(TensorModel, SliceGroupsCollectPairsPerThirdIndex) {
  auto t = support::load("strong_3x3x3.txt");
  auto groups = slice_groups(t);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0].k, 0);
  EXPECT_EQ(groups[0].members, (std::vector<Pair>{{0, 0}, {1, 1}, {2, 0}}));
  EXPECT_EQ(groups[0].values, (std::vector<double>{-1, -1, -1}));
  EXPECT_EQ(groups[1].members, (std::vector<Pair>{{0, 2}, {2, 0}}));
  EXPECT_EQ(groups[2].members, (std::vector<Pair>{{1, 2}, {2, 0}, {2, 1}}));
}

TEST(TensorModel, SymmetricFilesAreClosedUnderPermutation) {
  auto t = support::load("symmetric_5x5x5.txt");
  EXPECT_TRUE(t.symmetric());
  EXPECT_EQ(t.listed_entries().size(), 11u);
  std::set<Index3> closure;
  for (const auto& [idx, v] : t.listed_entries()) {
    Index3 p = idx;
    std::sort(p.begin(), p.end());
    do {
      closure.insert(p);
      EXPECT_EQ(t.at(p), v);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  const std::size_t expect = closure.size();
  EXPECT_EQ(t.size(), expect);
}

TEST(TensorModel, ConflictingSymmetricValuesAreRejected) {
  EXPECT_THROW(parse_tensor("dims 2 2 2 symmetric\n1 1 2 1\n2 1 1 2\n"), ParseError);
  EXPECT_NO_THROW(parse_tensor("dims 2 2 2 symmetric\n1 1 2 1\n2 1 1 1\n"));
  PartialTensor t({3, 3, 3}, true);
  t.set({0, 1, 2}, 7.0);
  EXPECT_THROW(t.set({2, 0, 1}, 7.5), std::invalid_argument);
  EXPECT_THROW(parse_tensor("dims 2 3 2 symmetric\n1 1 1 1\n"), std::exception);
}

TEST(TensorModel, ParseErrorsCarryLineNumbers) {
  struct Case {
    const char* text;
    int line;
  };
  for (auto c : {Case{"dims 2 2\n", 1}, Case{"# c\ndims 2 2 2\n1 1 1\n", 3}, Case{"dims 2 2 2\n1 1 3 1\n", 2},
                 Case{"dims 2 2 2\n1 1 1 x\n", 2}, Case{"dims 2 2 2\n1 1 1 1\n1 1 1 2\n", 3},
                 Case{"1 1 1 1\n", 1}, Case{"dims 2 0 2\n", 1}, Case{"dims 2 2 2\n1 1 1 nan\n", 2}}) {
    try {
      parse_tensor(c.text);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), c.line) << c.text;
    }
  }
}

TEST(TensorModel, CommentsAndRepeatsAreAccepted) {
  auto t = parse_tensor("# header comment\n\ndims 2 2 2\n  # indented comment\n1 1 1 3\n1 1 1 3\n2 2 2 -0.5\n");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.at({1, 1, 1}), -0.5);
}

TEST(TensorModel, ResidualIsMaxAbsoluteError) {
  auto t = support::load("strong_3x3x3.txt");
  Eigen::Vector3d a(1, -1, 1), b(1, -1, -1), c(-1, -1, 1);
  EXPECT_EQ(residual(t, a, b, c), 0.0);
  c[2] = 1.5;
  EXPECT_DOUBLE_EQ(residual(t, a, b, c), 0.5);
}
