#pragma once

// Dolev-Yao attacker knowledge.
//
// The knowledge base keeps the observed messages plus a lazily computed
// analysis closure: everything obtainable by projecting pairs, decrypting with
// derivable private keys and cancelling XOR combinations. Derivability of a
// goal is then decided by synthesis over that closure: public constants are
// free, function symbols may be applied to derivable arguments up to the
// construction-depth bound, and XOR goals are checked by Gaussian elimination
// over GF(2) against the known XOR terms.

#include <akalab/term.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <vector>

namespace akalab {

inline constexpr std::size_t kDefaultDepthBound = 4;

namespace detail {

// Row-reduced basis over GF(2); vectors are bitsets indexed by atom position.
class Gf2Basis {
 public:
  explicit Gf2Basis(std::size_t width) : words_((width + 63) / 64) {}

  using Row = std::vector<std::uint64_t>;

  Row zero_row() const { return Row(words_, 0); }

  static void set(Row& r, std::size_t i) { r[i / 64] |= (std::uint64_t{1} << (i % 64)); }

  void add(Row r) {
    reduce(r);
    if (auto p = pivot(r)) rows_.emplace(*p, std::move(r));
  }

  bool in_span(Row r) const {
    reduce(r);
    return !pivot(r).has_value();
  }

 private:
  static std::optional<std::size_t> pivot(const Row& r) {
    for (std::size_t w = 0; w < r.size(); ++w)
      if (r[w]) return w * 64 + static_cast<std::size_t>(__builtin_ctzll(r[w]));
    return std::nullopt;
  }

  void reduce(Row& r) const {
    // Rows are keyed by pivot; eliminating in ascending pivot order is enough
    // because each stored row has no bits below its pivot.
    for (const auto& [p, row] : rows_) {
      if (r[p / 64] & (std::uint64_t{1} << (p % 64)))
        for (std::size_t w = 0; w < r.size(); ++w) r[w] ^= row[w];
    }
  }

  std::size_t words_;
  std::map<std::size_t, Row> rows_;
};

}  // namespace detail

class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::size_t depth_bound = kDefaultDepthBound) : depth_(depth_bound) {}

  std::size_t depth_bound() const { return depth_; }
  const std::vector<Term>& observed() const { return observed_; }
  const std::set<BaseId>& revealed_bases() const { return revealed_; }

  void observe(const Term& t) {
    Term n = normalize(t);
    // Something already in the closure adds no knowledge.
    if (closure_ && closure_->known.contains(n)) return;
    observed_.push_back(n);
    if (closure_) closure_ = std::make_shared<const Closure>(extend(*closure_, {n}));
  }

  void reveal_base(const BaseId& b) {
    if (revealed_.insert(b).second && closure_)
      closure_ = std::make_shared<const Closure>(extend(*closure_, {}));
  }

  /// Analysis closure (all stored terms in normal form).
  const std::set<Term>& saturate() const { return state().known; }

  bool derivable(const Term& t) const {
    const Closure& c = state();
    return synth(c, normalize(t), depth_);
  }

  /// Derivability with an explicit construction-depth budget.
  bool derivable_within(const Term& t, std::size_t depth) const {
    return synth(state(), normalize(t), depth);
  }

 private:
  struct Closure {
    std::set<Term> known;
    std::vector<Term> xors;        // Xor terms in `known`
    std::vector<Term> pending_dec;  // aenc terms whose key is not yet derivable
    mutable std::map<std::pair<Term, std::size_t>, bool> memo;
  };

  const Closure& state() const {
    if (!closure_) closure_ = std::make_shared<const Closure>(extend(Closure{}, observed_));
    return *closure_;
  }

  bool nat_known(const Closure& c, const Term& t) const {
    if (revealed_.contains(t.base())) return true;
    // The attacker knows how counters are incremented: from sqn(b,+o) it
    // obtains every later value of the same counter.
    auto it = c.known.lower_bound(Term::nat(t.base(), 0));
    for (; it != c.known.end() && it->kind() == Kind::Nat && it->label() == t.label(); ++it)
      if (it->offset() <= t.offset()) return true;
    return false;
  }

  bool synth(const Closure& c, const Term& t, std::size_t d) const {
    switch (t.kind()) {
      case Kind::Const:
        return true;
      case Kind::Name:
        return c.known.contains(t);
      case Kind::Nat:
        return c.known.contains(t) || nat_known(c, t);
      default:
        break;
    }
    if (c.known.contains(t)) return true;
    // Pairing and XOR are free; only function symbols use up depth.
    bool free = t.kind() == Kind::Xor || t.sym() == Sym::pair;
    if (d == 0 && !free) return false;
    auto key = std::make_pair(t, d);
    if (auto it = c.memo.find(key); it != c.memo.end()) return it->second;
    std::size_t sub = free ? d : d - 1;
    bool ok;
    if (t.kind() == Kind::Apply) {
      ok = true;
      for (const Term& k : t.kids())
        if (!synth(c, k, sub)) {
          ok = false;
          break;
        }
    } else {
      ok = xor_in_span(c, xor_atoms(t), sub);
    }
    c.memo.emplace(std::move(key), ok);
    return ok;
  }

  // Is the XOR of `target` atoms a combination of known XOR terms and atoms
  // synthesizable within `d`?
  bool xor_in_span(const Closure& c, const std::vector<Term>& target, std::size_t d) const {
    std::map<Term, std::size_t> index;
    auto idx = [&](const Term& a) {
      auto [it, _] = index.emplace(a, index.size());
      return it->second;
    };
    for (const Term& a : target) idx(a);
    for (const Term& x : c.xors)
      for (const Term& a : x.kids()) idx(a);

    detail::Gf2Basis basis(index.size());
    for (const Term& x : c.xors) {
      auto row = basis.zero_row();
      for (const Term& a : x.kids()) detail::Gf2Basis::set(row, index.at(a));
      basis.add(std::move(row));
    }
    std::set<Term> own(target.begin(), target.end());
    for (const auto& [atom, i] : index) {
      // Atoms of the goal are its subterms and keep the budget; atoms brought
      // in by other known XORs cost a level, which keeps the recursion finite.
      bool ok = own.contains(atom) ? synth(c, atom, d)
                : d > 0            ? synth(c, atom, d - 1)
                                   : atom.kind() == Kind::Const || c.known.contains(atom) ||
                                         (atom.kind() == Kind::Nat && nat_known(c, atom));
      if (ok) {
        auto row = basis.zero_row();
        detail::Gf2Basis::set(row, i);
        basis.add(std::move(row));
      }
    }
    auto goal = basis.zero_row();
    for (const Term& a : target) detail::Gf2Basis::set(goal, index.at(a));
    return basis.in_span(std::move(goal));
  }

  Closure extend(Closure c, const std::vector<Term>& fresh) const {
    c.memo.clear();
    std::vector<Term> work(fresh.begin(), fresh.end());
    for (;;) {
      while (!work.empty()) {
        Term t = std::move(work.back());
        work.pop_back();
        if (!c.known.insert(t).second) continue;
        c.memo.clear();
        if (t.is_pair()) {
          work.push_back(t.kid(0));
          work.push_back(t.kid(1));
        } else if (t.is_apply(Sym::aenc)) {
          c.pending_dec.push_back(t);
        } else if (t.kind() == Kind::Xor) {
          c.xors.push_back(t);
        }
      }
      // Decryption: aenc(m, pk(sk)) with sk derivable yields m.
      std::vector<Term> still;
      for (const Term& e : c.pending_dec) {
        const Term& key = e.kid(1);
        if (key.is_apply(Sym::pk) && synth(c, key.kid(0), depth_))
          work.push_back(e.kid(0));
        else
          still.push_back(e);
      }
      c.pending_dec = std::move(still);
      // XOR cancellation: recover individual atoms of known XOR terms.
      std::set<Term> candidates;
      for (const Term& x : c.xors)
        for (const Term& a : x.kids())
          if (!c.known.contains(a)) candidates.insert(a);
      for (const Term& a : candidates)
        if (xor_in_span(c, {a}, depth_)) work.push_back(a);
      if (work.empty()) break;
    }
    return c;
  }

  std::vector<Term> observed_;
  std::set<BaseId> revealed_;
  std::size_t depth_;
  mutable std::shared_ptr<const Closure> closure_;
};

inline KnowledgeBase observe(KnowledgeBase kb, const Term& t) {
  kb.observe(t);
  return kb;
}

inline KnowledgeBase saturate(KnowledgeBase kb) {
  kb.saturate();
  return kb;
}

inline bool derivable(const KnowledgeBase& kb, const Term& t) { return kb.derivable(t); }

}  // namespace akalab
