#include <gtest/gtest.h>

#include <random>

#include "s2fix/group_words.hpp"

using namespace s2fix;

namespace {

const Word a = Word::generator(0);
const Word b = Word::generator(1);
const Word c = Word::generator(2);

Word raw(std::initializer_list<std::pair<int, int>> letters) {
  std::vector<Letter> v;
  for (auto [g, e] : letters) v.push_back({g, e});
  return Word(v);
}

}  // namespace

TEST(FreeReduce, Examples) {
  EXPECT_TRUE((a * a.inverse()).empty());
  EXPECT_EQ(raw({{0, 1}, {1, 1}, {1, -1}, {0, 1}}), a * a);
  const Word w = raw({{0, 1}, {1, -1}, {2, 1}});
  EXPECT_EQ(free_reduce(w), w);
}

TEST(FreeReduce, NestedCancellation) {
  EXPECT_TRUE(raw({{0, 1}, {1, 1}, {2, 1}, {2, -1}, {1, -1}, {0, -1}}).empty());
  EXPECT_THROW(raw({{0, 2}}), Error);
}

TEST(FreeReduce, IdempotentAndShortening) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> gen(0, 2), sign(0, 1), len(0, 12);
  for (int t = 0; t < 500; ++t) {
    std::vector<Letter> letters;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) letters.push_back({gen(rng), sign(rng) ? 1 : -1});
    const Word w(letters);
    EXPECT_LE(w.length(), letters.size());
    EXPECT_EQ(free_reduce(w), w);
    for (std::size_t i = 1; i < w.length(); ++i) {
      const auto& l = w.letters();
      EXPECT_FALSE(l[i - 1].gen == l[i].gen && l[i - 1].exp == -l[i].exp);
    }
  }
}

TEST(CommutatorWord, Examples) {
  EXPECT_TRUE(commutator_word(a, a).empty());
  const Word ab = commutator_word(a, b);
  EXPECT_EQ(ab.length(), 4u);
  EXPECT_EQ(ab, raw({{0, 1}, {1, 1}, {0, -1}, {1, -1}}));
  EXPECT_TRUE(commutator_word(a, Word()).empty());
  EXPECT_EQ(commutator_word(a, b).inverse(), commutator_word(b, a));
}

TEST(LevelSets, TwoGenerators) {
  const auto s = level_sets({0, 1}, 1);
  ASSERT_EQ(s.levels.size(), 2u);
  EXPECT_EQ(s.levels[0], (std::vector<Word>{a, b}));
  EXPECT_EQ(s.levels[1], (std::vector<Word>{commutator_word(a, b), commutator_word(b, a)}));
}

TEST(LevelSets, SingletonHasNoCommutators) {
  const auto s = level_sets({0}, 4);
  ASSERT_EQ(s.levels.size(), 5u);
  for (int i = 1; i <= 4; ++i) EXPECT_TRUE(s.levels[i].empty());
}

TEST(LevelSets, CountingBound) {
  const auto s = level_sets({0, 1, 2}, 2);
  EXPECT_EQ(s.levels[1].size(), 6u);
  EXPECT_LE(s.levels[2].size(), 3 * s.levels[1].size());
  for (const auto& w : s.levels[2]) {
    bool found = false;
    for (const auto& x : s.levels[0]) {
      for (const auto& y : s.levels[1]) found = found || commutator_word(x, y) == w;
    }
    EXPECT_TRUE(found);
  }
}

TEST(LevelSets, CanonicalAndDeterministic) {
  const auto s1 = level_sets({2, 0, 1}, 3);
  const auto s2 = level_sets({1, 2, 0, 1}, 3);
  EXPECT_EQ(s1.levels, s2.levels);
  for (const auto& level : s1.levels) {
    for (std::size_t i = 1; i < level.size(); ++i) EXPECT_TRUE(level[i - 1] < level[i]);
  }
  EXPECT_THROW(level_sets({}, 1), Error);
}

TEST(DerivedGenerators, Examples) {
  const Word ab = commutator_word(a, b), ba = commutator_word(b, a);
  std::vector<Word> expected = {ab, ba, commutator_word(a, ab), commutator_word(a, ba), commutator_word(b, ab),
                                commutator_word(b, ba)};
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(derived_generators({0, 1}, 2), expected);
  EXPECT_EQ(derived_generators({0, 1}, 1), level_sets({0, 1}, 1).levels[1]);
  EXPECT_TRUE(derived_generators({0}, 3).empty());
}

TEST(Words, Rendering) {
  EXPECT_EQ(to_string(commutator_word(a, b), {"f", "g"}), "f g f^-1 g^-1");
  EXPECT_EQ(to_string(Word(), {"f"}), "e");
}
