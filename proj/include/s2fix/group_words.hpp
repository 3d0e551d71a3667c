#pragma once

// Free-group words over integer generator ids, with the commutator level sets
// S_(0) = S, S_(i+1) = {[a, b] : a in S, b in S_(i)}.

#include <algorithm>
#include <compare>
#include <set>
#include <string>
#include <vector>

#include "s2fix/error.hpp"

namespace s2fix {

struct Letter {
  int gen = 0;
  int exp = 1;  // +1 or -1
  auto operator<=>(const Letter&) const = default;
};

/// Freely reduced word. The empty word is the identity.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> letters) : letters_(reduce(std::move(letters))) {}
  static Word generator(int gen) { return Word({Letter{gen, 1}}); }

  const std::vector<Letter>& letters() const noexcept { return letters_; }
  std::size_t length() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }

  Word inverse() const {
    std::vector<Letter> out;
    out.reserve(letters_.size());
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) out.push_back({it->gen, -it->exp});
    return Word(std::move(out));
  }

  friend Word operator*(const Word& a, const Word& b) {
    std::vector<Letter> out = a.letters_;
    out.insert(out.end(), b.letters_.begin(), b.letters_.end());
    return Word(std::move(out));
  }

  friend bool operator==(const Word&, const Word&) = default;

  // Canonical order: shorter first, then lexicographic on (gen, exp).
  friend bool operator<(const Word& a, const Word& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.letters_ < b.letters_;
  }

  static std::vector<Letter> reduce(std::vector<Letter> in) {
    std::vector<Letter> out;
    out.reserve(in.size());
    for (const auto& l : in) {
      if (l.exp != 1 && l.exp != -1) throw Error(ErrorCode::InvalidArgument, "letter exponent must be +1 or -1");
      if (!out.empty() && out.back().gen == l.gen && out.back().exp == -l.exp) {
        out.pop_back();
      } else {
        out.push_back(l);
      }
    }
    return out;
  }

 private:
  std::vector<Letter> letters_;
};

inline Word free_reduce(const Word& w) { return Word(w.letters()); }

/// [u, v] = u v u^-1 v^-1, freely reduced.
inline Word commutator_word(const Word& u, const Word& v) { return u * v * u.inverse() * v.inverse(); }

/// Renders letters as names, inverse letters with a trailing "^-1".
inline std::string to_string(const Word& w, const std::vector<std::string>& names) {
  if (w.empty()) return "e";
  std::string out;
  for (const auto& l : w.letters()) {
    if (!out.empty()) out += ' ';
    out += l.gen >= 0 && static_cast<std::size_t>(l.gen) < names.size() ? names[l.gen] : "g" + std::to_string(l.gen);
    if (l.exp < 0) out += "^-1";
  }
  return out;
}

struct WordLevelSets {
  std::vector<std::vector<Word>> levels;  // levels[i] = S_(i), canonically sorted
};

/// S_(0), ..., S_(k) over the generator ids in S. Trivial words are dropped
/// and each level is deduplicated and canonically sorted.
inline WordLevelSets level_sets(const std::vector<int>& S, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "k must be nonnegative");
  if (S.empty()) throw Error(ErrorCode::InvalidArgument, "generating set must be nonempty");
  WordLevelSets out;
  std::set<Word> base;
  for (int g : S) base.insert(Word::generator(g));
  out.levels.emplace_back(base.begin(), base.end());
  for (int i = 0; i < k; ++i) {
    std::set<Word> next;
    for (const auto& a : out.levels[0]) {
      for (const auto& b : out.levels[i]) {
        Word c = commutator_word(a, b);
        if (!c.empty()) next.insert(std::move(c));
      }
    }
    out.levels.emplace_back(next.begin(), next.end());
  }
  return out;
}

/// S_(1) u ... u S_(k), which generates the commutator subgroup of a
/// k-nilpotent group generated by S.
inline std::vector<Word> derived_generators(const std::vector<int>& S, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const auto sets = level_sets(S, k);
  std::set<Word> all;
  for (int i = 1; i <= k; ++i) all.insert(sets.levels[i].begin(), sets.levels[i].end());
  return {all.begin(), all.end()};
}

/// Product of the letters' values in letter order.
template <class Group>
typename Group::Element evaluate_word(const Group& group, const Word& w,
                                      const std::vector<typename Group::Element>& gens) {
  auto acc = group.identity();
  for (const auto& l : w.letters()) {
    if (l.gen < 0 || static_cast<std::size_t>(l.gen) >= gens.size()) {
      throw Error(ErrorCode::UnknownGenerator, "generator id " + std::to_string(l.gen) + " out of range");
    }
    const auto& g = gens[l.gen];
    acc = group.multiply(acc, l.exp > 0 ? g : group.inverse(g));
  }
  return acc;
}

}  // namespace s2fix
