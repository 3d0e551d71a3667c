#include <gtest/gtest.h>

#include "s2fix/finite_group.hpp"
#include "s2fix/group_words.hpp"

using namespace s2fix;

namespace {

FiniteGroupOracle<UnitriangularGroup> ut(int n, int m) {
  UnitriangularGroup g(n, m);
  std::vector<UnitriangularGroup::Element> gens;
  for (int i = 1; i < n; ++i) gens.push_back(g.elementary(i, i + 1));
  return FiniteGroupOracle<UnitriangularGroup>(g, gens);
}

}  // namespace

TEST(Generate, IdentityOnly) {
  UnitriangularGroup g(3, 3);
  FiniteGroupOracle<UnitriangularGroup> o(g, {g.identity()});
  EXPECT_EQ(o.elements(), std::vector<UnitriangularGroup::Element>{g.identity()});
}

TEST(Generate, Transvections) {
  EXPECT_EQ(ut(3, 3).elements().size(), 27u);
  EXPECT_EQ(ut(4, 2).elements().size(), 64u);
  const auto o = ut(3, 3);
  for (const auto& e : o.elements()) {
    EXPECT_EQ(e[0], 1);
    EXPECT_EQ(e[4], 1);
    EXPECT_EQ(e[8], 1);
    EXPECT_EQ(e[3] + e[6] + e[7], 0);
  }
}

TEST(Group, RejectsOversizedOrDegenerate) {
  EXPECT_THROW(UnitriangularGroup(1, 3), Error);
  EXPECT_THROW(UnitriangularGroup(5, 5), Error);
  EXPECT_THROW(UnitriangularGroup(3, 3).elementary(2, 1), Error);
}

TEST(LowerCentralSeries, Orders) {
  const auto lcs = ut(3, 3).lower_central_series();
  std::vector<std::size_t> orders;
  for (const auto& level : lcs.chain) orders.push_back(level.size());
  EXPECT_EQ(orders, (std::vector<std::size_t>{27, 3, 1}));
  EXPECT_EQ(lcs.nilpotency_length, 2);
  EXPECT_EQ(ut(4, 2).lower_central_series().nilpotency_length, 3);
  EXPECT_EQ(ut(2, 5).lower_central_series().nilpotency_length, 1);
}

TEST(Verify, NilpotentInstances) {
  for (auto [n, m] : {std::pair{3, 3}, std::pair{3, 5}, std::pair{4, 2}}) {
    const auto r = ut(n, m).verify_commutator_generation();
    EXPECT_TRUE(r.commutator_identities) << n << "," << m;
    EXPECT_TRUE(r.last_level_generates) << n << "," << m;
    EXPECT_TRUE(r.derived_generates) << n << "," << m;
    EXPECT_TRUE(r.all());
  }
  const auto abelian = ut(2, 5).verify_commutator_generation();
  EXPECT_TRUE(abelian.all());
  EXPECT_EQ(abelian.chain_orders, (std::vector<std::size_t>{5, 1}));
}

TEST(Verify, SymmetricGroupIsNotNilpotent) {
  PermutationGroup s3(3);
  FiniteGroupOracle<PermutationGroup> o(s3, {s3.transposition(0, 1), s3.cycle()});
  EXPECT_EQ(o.elements().size(), 6u);
  try {
    o.verify_commutator_generation();
    ADD_FAILURE() << "S3 accepted as nilpotent";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotNilpotent);
  }
}

TEST(Words, CommutatorIdentityAtTheCentralLevel) {
  // UT(4, Z/2) has length 3, so [G, G_(1)] = G_(2) is central and the
  // identity [f, h1 h2] = [f, h1][f, h2] holds for h1, h2 in G_(1).
  const auto o = ut(4, 2);
  const auto& g = o.group();
  const auto lcs = o.lower_central_series();
  const auto& H = lcs.chain[1];
  // Words over ids 0 = f, 1 = h1, 2 = h2.
  const Word f = Word::generator(0), h1 = Word::generator(1), h2 = Word::generator(2);
  const Word lhs = commutator_word(f, h1 * h2);
  const Word rhs = commutator_word(f, h1) * commutator_word(f, h2);
  EXPECT_NE(lhs, rhs);  // distinct as free words
  for (const auto& fe : o.elements()) {
    for (const auto& a : H) {
      for (const auto& b : H) {
        EXPECT_EQ(evaluate_word(g, lhs, {fe, a, b}), evaluate_word(g, rhs, {fe, a, b}));
      }
    }
  }
}

TEST(Words, EvaluationMatchesOracleCommutator) {
  const auto o = ut(3, 5);
  const auto& gens = o.generators();
  const Word w = commutator_word(Word::generator(0), Word::generator(1));
  EXPECT_EQ(evaluate_word(o.group(), w, gens), o.commutator(gens[0], gens[1]));
  EXPECT_THROW(evaluate_word(o.group(), Word::generator(4), gens), Error);
}
