#pragma once

// Brute-force finite groups used to check the commutator-generation lemmas
// exactly: subgroup closure, lower central series, and the word-level
// identities evaluated over every element.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "s2fix/error.hpp"
#include "s2fix/group_words.hpp"

namespace s2fix {

template <class G>
concept FiniteGroup = requires(const G& g, const typename G::Element& a) {
  { g.identity() } -> std::convertible_to<typename G::Element>;
  { g.multiply(a, a) } -> std::convertible_to<typename G::Element>;
  { g.inverse(a) } -> std::convertible_to<typename G::Element>;
  { a < a } -> std::convertible_to<bool>;
};

/// Upper unitriangular n x n matrices over Z/m, stored row-major.
class UnitriangularGroup {
 public:
  using Element = std::vector<int>;

  UnitriangularGroup(int n, int m) : n_(n), m_(m) {
    if (n < 2 || m < 2) throw Error(ErrorCode::InvalidArgument, "unitriangular group needs n >= 2 and m >= 2");
    double order = 1.0;
    for (int i = 0; i < n * (n - 1) / 2; ++i) order *= m;
    if (order > 1e6) throw Error(ErrorCode::InvalidArgument, "group order m^(n(n-1)/2) exceeds 1e6");
  }

  int degree() const noexcept { return n_; }
  int modulus() const noexcept { return m_; }

  Element identity() const {
    Element e(n_ * n_, 0);
    for (int i = 0; i < n_; ++i) e[i * n_ + i] = 1;
    return e;
  }

  /// I + E_ij with 1-based indices, i < j.
  Element elementary(int i, int j) const {
    if (i < 1 || j > n_ || i >= j) throw Error(ErrorCode::InvalidArgument, "transvection needs 1 <= i < j <= n");
    Element e = identity();
    e[(i - 1) * n_ + (j - 1)] = 1;
    return e;
  }

  Element multiply(const Element& a, const Element& b) const {
    Element c(n_ * n_, 0);
    for (int i = 0; i < n_; ++i) {
      for (int k = i; k < n_; ++k) {
        const int aik = a[i * n_ + k];
        if (aik == 0) continue;
        for (int j = k; j < n_; ++j) c[i * n_ + j] = (c[i * n_ + j] + aik * b[k * n_ + j]) % m_;
      }
    }
    return c;
  }

  // Back substitution on the unit upper triangle.
  Element inverse(const Element& a) const {
    Element inv = identity();
    for (int j = 0; j < n_; ++j) {
      for (int i = j - 1; i >= 0; --i) {
        int s = 0;
        for (int k = i + 1; k <= j; ++k) s = (s + a[i * n_ + k] * inv[k * n_ + j]) % m_;
        inv[i * n_ + j] = (m_ - s) % m_;
      }
    }
    return inv;
  }

  bool is_member(const Element& a) const {
    if (static_cast<int>(a.size()) != n_ * n_) return false;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const int v = a[i * n_ + j];
        if (i == j ? v != 1 : (i > j ? v != 0 : (v < 0 || v >= m_))) return false;
      }
    }
    return true;
  }

 private:
  int n_;
  int m_;
};

/// Symmetric group on n points; permutations compose as functions (a b)(x) = a(b(x)).
class PermutationGroup {
 public:
  using Element = std::vector<int>;

  explicit PermutationGroup(int n) : n_(n) {
    if (n < 1 || n > 8) throw Error(ErrorCode::InvalidArgument, "permutation degree must be in [1, 8]");
  }

  Element identity() const {
    Element e(n_);
    std::iota(e.begin(), e.end(), 0);
    return e;
  }
  Element transposition(int i, int j) const {
    Element e = identity();
    std::swap(e.at(i), e.at(j));
    return e;
  }
  Element cycle() const {
    Element e(n_);
    for (int i = 0; i < n_; ++i) e[i] = (i + 1) % n_;
    return e;
  }
  Element multiply(const Element& a, const Element& b) const {
    Element c(n_);
    for (int i = 0; i < n_; ++i) c[i] = a[b[i]];
    return c;
  }
  Element inverse(const Element& a) const {
    Element c(n_);
    for (int i = 0; i < n_; ++i) c[a[i]] = i;
    return c;
  }

 private:
  int n_;
};

template <FiniteGroup G>
struct LowerCentralSeries {
  std::vector<std::vector<typename G::Element>> chain;  // G_(0), G_(1), ..., ending at {e}
  int nilpotency_length = 0;                            // first k with G_(k) trivial
};

struct AlgebraReport {
  int nilpotency_length = 0;
  std::vector<std::size_t> chain_orders;
  // [f,h1 h2] = [f,h1][f,h2] and [f1 f2,h] = [f1,h][f2,h] for h in G_(k-2),
  // k the nilpotency length, where [G, G_(k-2)] = G_(k-1) is central.
  bool commutator_identities = false;
  bool last_level_generates = false;    // <S_(k-1)> = G_(k-1)
  bool derived_generates = false;       // <S_(1), ..., S_(k)> = G_(1)
  bool all() const { return commutator_identities && last_level_generates && derived_generates; }
};

template <FiniteGroup G>
class FiniteGroupOracle {
 public:
  using Element = typename G::Element;

  FiniteGroupOracle(G group, std::vector<Element> generators)
      : group_(std::move(group)), generators_(std::move(generators)), elements_(generate(generators_)) {}

  const G& group() const noexcept { return group_; }
  const std::vector<Element>& generators() const noexcept { return generators_; }
  /// Every element of <generators>, sorted.
  const std::vector<Element>& elements() const noexcept { return elements_; }

  /// Subgroup generated by `gens`, by breadth-first closure; sorted.
  std::vector<Element> generate(const std::vector<Element>& gens) const {
    std::set<Element> seen{group_.identity()};
    std::deque<Element> queue{group_.identity()};
    std::vector<Element> steps;
    for (const auto& g : gens) {
      steps.push_back(g);
      steps.push_back(group_.inverse(g));
    }
    while (!queue.empty()) {
      const Element x = queue.front();
      queue.pop_front();
      for (const auto& s : steps) {
        Element y = group_.multiply(x, s);
        if (seen.insert(y).second) queue.push_back(std::move(y));
      }
    }
    return {seen.begin(), seen.end()};
  }

  Element commutator(const Element& f, const Element& h) const {
    return group_.multiply(group_.multiply(f, h), group_.multiply(group_.inverse(f), group_.inverse(h)));
  }

  /// [A, B] = <[a, b] : a in A, b in B>.
  std::vector<Element> commutator_subgroup(const std::vector<Element>& A, const std::vector<Element>& B) const {
    std::set<Element> gens;
    for (const auto& a : A) {
      for (const auto& b : B) gens.insert(commutator(a, b));
    }
    return generate({gens.begin(), gens.end()});
  }

  /// G_(0) = G, G_(i+1) = [G, G_(i)] until trivial. Throws NotNilpotent if
  /// the chain stalls above {e}.
  LowerCentralSeries<G> lower_central_series() const {
    LowerCentralSeries<G> out;
    out.chain.push_back(elements_);
    while (out.chain.back().size() > 1) {
      auto next = commutator_subgroup(elements_, out.chain.back());
      if (next.size() == out.chain.back().size()) {
        throw Error(ErrorCode::NotNilpotent, "lower central series stabilizes at order " + std::to_string(next.size()));
      }
      out.chain.push_back(std::move(next));
    }
    out.nilpotency_length = static_cast<int>(out.chain.size()) - 1;
    return out;
  }

  /// Exhaustive check of the commutator identities and the two generation
  /// statements for the generating set of this oracle.
  AlgebraReport verify_commutator_generation() const {
    const auto lcs = lower_central_series();
    AlgebraReport r;
    r.nilpotency_length = lcs.nilpotency_length;
    for (const auto& level : lcs.chain) r.chain_orders.push_back(level.size());
    const int k = lcs.nilpotency_length;
    if (k == 0) {
      r.commutator_identities = r.last_level_generates = r.derived_generates = true;
      return r;
    }

    const auto& G0 = elements_;
    const auto& H = lcs.chain[k >= 2 ? k - 2 : 0];
    bool ok = true;
    for (const auto& f : G0) {
      for (const auto& h1 : H) {
        const Element c1 = commutator(f, h1);
        for (const auto& h2 : H) {
          if (commutator(f, group_.multiply(h1, h2)) != group_.multiply(c1, commutator(f, h2))) ok = false;
        }
      }
    }
    for (const auto& f1 : G0) {
      for (const auto& f2 : G0) {
        const Element f12 = group_.multiply(f1, f2);
        for (const auto& h : H) {
          if (commutator(f12, h) != group_.multiply(commutator(f1, h), commutator(f2, h))) ok = false;
        }
      }
    }
    r.commutator_identities = ok;

    std::vector<int> ids(generators_.size());
    std::iota(ids.begin(), ids.end(), 0);
    const auto sets = level_sets(ids, k);
    auto values = [&](const std::vector<Word>& words) {
      std::vector<Element> out;
      for (const auto& w : words) out.push_back(evaluate_word(group_, w, generators_));
      return out;
    };
    r.last_level_generates = generate(values(sets.levels[k - 1])) == lcs.chain[k - 1];
    r.derived_generates = generate(values(derived_generators(ids, k))) == lcs.chain[1];
    return r;
  }

 private:
  G group_;
  std::vector<Element> generators_;
  std::vector<Element> elements_;
};

}  // namespace s2fix
