#pragma once

// Symbolic message terms modulo the XOR theory.
//
// Terms are immutable, reference-counted trees. Every constructor in this
// header except the raw_* family returns a term in normal form, so equality of
// normalized terms is plain structural equality.

#include <akalab/error.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace akalab {

enum class Kind : std::uint8_t { Const = 0, Name = 1, Nat = 2, Apply = 3, Xor = 4 };

enum class Sym : std::uint8_t {
  f1, f2, f3, f4, f5, f1star, f5star, kdf, sha256, aenc, pk, pair, fst, snd
};

inline constexpr std::array<Sym, 14> kAllSyms = {
    Sym::f1,  Sym::f2,     Sym::f3,     Sym::f4,  Sym::f5,     Sym::f1star, Sym::f5star,
    Sym::kdf, Sym::sha256, Sym::aenc,   Sym::pk,  Sym::pair,   Sym::fst,    Sym::snd};

inline constexpr std::size_t arity(Sym s) {
  switch (s) {
    case Sym::sha256:
    case Sym::pk:
    case Sym::fst:
    case Sym::snd:
      return 1;
    default:
      return 2;
  }
}

inline constexpr std::string_view sym_name(Sym s) {
  switch (s) {
    case Sym::f1: return "f1";
    case Sym::f2: return "f2";
    case Sym::f3: return "f3";
    case Sym::f4: return "f4";
    case Sym::f5: return "f5";
    case Sym::f1star: return "f1star";
    case Sym::f5star: return "f5star";
    case Sym::kdf: return "kdf";
    case Sym::sha256: return "sha256";
    case Sym::aenc: return "aenc";
    case Sym::pk: return "pk";
    case Sym::pair: return "pair";
    case Sym::fst: return "fst";
    case Sym::snd: return "snd";
  }
  return "?";
}

inline std::optional<Sym> sym_from_name(std::string_view name) {
  for (Sym s : kAllSyms)
    if (sym_name(s) == name) return s;
  return std::nullopt;
}

/// Identifies the (never materialized) initial sequence number of one subscriber.
struct BaseId {
  std::string subscriber;
  auto operator<=>(const BaseId&) const = default;
};

class Term;

namespace detail {

struct Builder;

struct Node {
  Kind kind{};
  Sym sym{};
  std::string label;       // Const label, Name label, Nat subscriber
  std::uint64_t num = 0;   // Name id, Nat offset
  std::vector<Term> kids;  // Apply arguments, Xor elements
  std::size_t hash = 0;
  std::size_t depth = 0;   // nesting of Apply/Xor nodes
  bool normal = false;
};

}  // namespace detail

class Term {
 public:
  Term() : Term(constant("zero")) {}

  static Term constant(std::string label);
  static Term fresh(std::uint64_t id, std::string label);
  static Term nat(BaseId base, std::uint64_t offset);
  static Term zero() { return constant("zero"); }

  // Raw constructors keep their input as given (no flattening or
  // cancellation). Used by tests and the parser before normalization.
  static Term raw_apply(Sym sym, std::vector<Term> args);
  static Term raw_xor(std::vector<Term> elems);

  Kind kind() const { return n_->kind; }
  Sym sym() const { return n_->sym; }
  const std::string& label() const { return n_->label; }
  std::uint64_t id() const { return n_->num; }
  std::uint64_t offset() const { return n_->num; }
  BaseId base() const { return BaseId{n_->label}; }
  std::span<const Term> kids() const { return n_->kids; }
  const Term& kid(std::size_t i) const { return n_->kids.at(i); }
  std::size_t hash() const { return n_->hash; }
  std::size_t depth() const { return n_->depth; }
  bool is_normal() const { return n_->normal; }

  bool is_const() const { return kind() == Kind::Const; }
  bool is_const(std::string_view l) const { return kind() == Kind::Const && label() == l; }
  bool is_zero() const { return is_const("zero"); }
  bool is_apply(Sym s) const { return kind() == Kind::Apply && sym() == s; }
  bool is_pair() const { return is_apply(Sym::pair); }

  bool same_node(const Term& o) const { return n_ == o.n_; }

 private:
  explicit Term(std::shared_ptr<const detail::Node> n) : n_(std::move(n)) {}
  static Term make(detail::Node n);
  friend struct detail::Builder;

  std::shared_ptr<const detail::Node> n_;
};

/// Total order on terms: constructor tag, then label/id, then children.
inline int compare(const Term& a, const Term& b);

inline bool operator==(const Term& a, const Term& b) {
  if (a.same_node(b)) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}
inline bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

inline Term normalize(const Term& t);

inline bool equal_mod_theory(const Term& a, const Term& b) { return normalize(a) == normalize(b); }

// Normalizing builders.
inline Term apply(Sym sym, std::vector<Term> args);
inline Term xor_of(std::vector<Term> elems);
inline Term xor_of(const Term& a, const Term& b) { return xor_of(std::vector<Term>{a, b}); }
inline Term pair(const Term& a, const Term& b) { return apply(Sym::pair, {a, b}); }
/// Right-nested tuple: <a,b,c> = pair(a, pair(b, c)).
inline Term tuple(std::initializer_list<Term> items);
inline Term tuple(std::span<const Term> items);
/// Inverse of tuple() for an expected element count; nullopt on shape mismatch.
inline std::optional<std::vector<Term>> untuple(const Term& t, std::size_t n);

inline Term f1(const Term& k, const Term& m) { return apply(Sym::f1, {k, m}); }
inline Term f2(const Term& k, const Term& m) { return apply(Sym::f2, {k, m}); }
inline Term f3(const Term& k, const Term& m) { return apply(Sym::f3, {k, m}); }
inline Term f4(const Term& k, const Term& m) { return apply(Sym::f4, {k, m}); }
inline Term f5(const Term& k, const Term& m) { return apply(Sym::f5, {k, m}); }
inline Term f1star(const Term& k, const Term& m) { return apply(Sym::f1star, {k, m}); }
inline Term f5star(const Term& k, const Term& m) { return apply(Sym::f5star, {k, m}); }
inline Term kdf(const Term& k, const Term& m) { return apply(Sym::kdf, {k, m}); }
inline Term sha256(const Term& m) { return apply(Sym::sha256, {m}); }
inline Term pk(const Term& sk) { return apply(Sym::pk, {sk}); }
inline Term aenc(const Term& m, const Term& key) { return apply(Sym::aenc, {m, key}); }

inline bool nat_less(const Term& a, const Term& b);
inline Term nat_increment(const Term& a, std::uint64_t k);

/// Canonical prefix rendering, e.g. `pair(xor{a,f5(k~1,r~2)},sqn(ue0,+3))`.
inline std::string render(const Term& t);

/// Xor elements of a normalized term (the term itself when it is not an Xor).
inline std::vector<Term> xor_atoms(const Term& t);

/// All subterms (including t), Xor nodes descended into.
inline void collect_subterms(const Term& t, std::vector<Term>& out);

// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace detail

inline Term Term::make(detail::Node n) {
  std::size_t h = detail::mix(static_cast<std::size_t>(n.kind), static_cast<std::size_t>(n.sym));
  h = detail::mix(h, std::hash<std::string>{}(n.label));
  h = detail::mix(h, std::hash<std::uint64_t>{}(n.num));
  std::size_t d = 0;
  for (const Term& k : n.kids) {
    h = detail::mix(h, k.hash());
    d = std::max(d, k.depth());
  }
  n.hash = h;
  n.depth = (n.kind == Kind::Apply || n.kind == Kind::Xor) ? d + 1 : 0;
  return Term(std::make_shared<const detail::Node>(std::move(n)));
}

inline Term Term::constant(std::string label) {
  detail::Node n;
  n.kind = Kind::Const;
  n.label = std::move(label);
  n.normal = true;
  return make(std::move(n));
}

inline Term Term::fresh(std::uint64_t id, std::string label) {
  detail::Node n;
  n.kind = Kind::Name;
  n.num = id;
  n.label = std::move(label);
  n.normal = true;
  return make(std::move(n));
}

inline Term Term::nat(BaseId base, std::uint64_t offset) {
  detail::Node n;
  n.kind = Kind::Nat;
  n.label = std::move(base.subscriber);
  n.num = offset;
  n.normal = true;
  return make(std::move(n));
}

inline Term Term::raw_apply(Sym sym, std::vector<Term> args) {
  if (args.size() != arity(sym))
    throw Error(Errc::InvalidArgument, "arity mismatch for " + std::string(sym_name(sym)));
  detail::Node n;
  n.kind = Kind::Apply;
  n.sym = sym;
  n.kids = std::move(args);
  return make(std::move(n));
}

inline Term Term::raw_xor(std::vector<Term> elems) {
  detail::Node n;
  n.kind = Kind::Xor;
  n.kids = std::move(elems);
  return make(std::move(n));
}

inline int compare(const Term& a, const Term& b) {
  if (a.same_node(b)) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case Kind::Const:
      return a.label().compare(b.label()) < 0 ? -1 : (a.label() == b.label() ? 0 : 1);
    case Kind::Name:
      if (a.id() != b.id()) return a.id() < b.id() ? -1 : 1;
      return a.label() < b.label() ? -1 : (a.label() == b.label() ? 0 : 1);
    case Kind::Nat:
      if (a.label() != b.label()) return a.label() < b.label() ? -1 : 1;
      if (a.offset() != b.offset()) return a.offset() < b.offset() ? -1 : 1;
      return 0;
    case Kind::Apply:
      if (a.sym() != b.sym()) return a.sym() < b.sym() ? -1 : 1;
      [[fallthrough]];
    case Kind::Xor: {
      auto ak = a.kids(), bk = b.kids();
      if (ak.size() != bk.size()) return ak.size() < bk.size() ? -1 : 1;
      for (std::size_t i = 0; i < ak.size(); ++i)
        if (int c = compare(ak[i], bk[i]); c != 0) return c;
      return 0;
    }
  }
  return 0;
}


namespace detail {

struct Builder {
  static Term normal_apply(Sym sym, std::vector<Term> args) {
    Node n;
    n.kind = Kind::Apply;
    n.sym = sym;
    n.kids = std::move(args);
    n.normal = true;
    return Term::make(std::move(n));
  }
  static Term normal_xor(std::vector<Term> elems) {
    Node n;
    n.kind = Kind::Xor;
    n.kids = std::move(elems);
    n.normal = true;
    return Term::make(std::move(n));
  }
};

// Elements must already be normal.
inline Term normal_xor_from(std::vector<Term> elems) {
  std::vector<Term> flat;
  flat.reserve(elems.size());
  for (Term& e : elems) {
    if (e.kind() == Kind::Xor)
      flat.insert(flat.end(), e.kids().begin(), e.kids().end());
    else if (!e.is_zero())
      flat.push_back(std::move(e));
  }
  std::sort(flat.begin(), flat.end());
  std::vector<Term> out;
  out.reserve(flat.size());
  for (std::size_t i = 0; i < flat.size();) {
    std::size_t j = i;
    while (j < flat.size() && flat[j] == flat[i]) ++j;
    if ((j - i) % 2 == 1) out.push_back(flat[i]);
    i = j;
  }
  if (out.empty()) return Term::zero();
  if (out.size() == 1) return out.front();
  return Builder::normal_xor(std::move(out));
}

inline Term normal_apply_from(Sym sym, std::vector<Term> args) {
  if (args.size() != arity(sym))
    throw Error(Errc::InvalidArgument, "arity mismatch for " + std::string(sym_name(sym)));
  if ((sym == Sym::fst || sym == Sym::snd) && args[0].is_pair())
    return args[0].kid(sym == Sym::fst ? 0 : 1);
  return Builder::normal_apply(sym, std::move(args));
}

}  // namespace detail

inline Term normalize(const Term& t) {
  if (t.is_normal()) return t;
  std::vector<Term> kids;
  kids.reserve(t.kids().size());
  for (const Term& k : t.kids()) kids.push_back(normalize(k));
  if (t.kind() == Kind::Xor) return detail::normal_xor_from(std::move(kids));
  return detail::normal_apply_from(t.sym(), std::move(kids));
}

inline Term apply(Sym sym, std::vector<Term> args) {
  for (Term& a : args) a = normalize(a);
  return detail::normal_apply_from(sym, std::move(args));
}

inline Term xor_of(std::vector<Term> elems) {
  for (Term& e : elems) e = normalize(e);
  return detail::normal_xor_from(std::move(elems));
}

inline Term tuple(std::span<const Term> items) {
  if (items.empty()) throw Error(Errc::InvalidArgument, "empty tuple");
  Term acc = normalize(items.back());
  for (std::size_t i = items.size() - 1; i-- > 0;) acc = pair(items[i], acc);
  return acc;
}

inline Term tuple(std::initializer_list<Term> items) {
  return tuple(std::span<const Term>(items.begin(), items.size()));
}

inline std::optional<std::vector<Term>> untuple(const Term& t, std::size_t n) {
  std::vector<Term> out;
  Term cur = t;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!cur.is_pair()) return std::nullopt;
    out.push_back(cur.kid(0));
    cur = cur.kid(1);
  }
  out.push_back(cur);
  return out;
}

inline bool nat_less(const Term& a, const Term& b) {
  if (a.kind() != Kind::Nat || b.kind() != Kind::Nat)
    throw Error(Errc::InvalidArgument, "nat_less on non-Nat term");
  if (a.base() != b.base())
    throw Error(Errc::BaseMismatch, a.label() + " vs " + b.label());
  return a.offset() < b.offset();
}

inline Term nat_increment(const Term& a, std::uint64_t k) {
  if (a.kind() != Kind::Nat) throw Error(Errc::InvalidArgument, "nat_increment on non-Nat term");
  if (k < 1) throw Error(Errc::InvalidArgument, "increment must be >= 1");
  return Term::nat(a.base(), a.offset() + k);
}

namespace detail {

inline void render_to(const Term& t, std::string& out) {
  switch (t.kind()) {
    case Kind::Const:
      out += t.label();
      return;
    case Kind::Name:
      out += t.label();
      out += '~';
      out += std::to_string(t.id());
      return;
    case Kind::Nat:
      out += "sqn(";
      out += t.label();
      out += ",+";
      out += std::to_string(t.offset());
      out += ')';
      return;
    case Kind::Apply:
      out += sym_name(t.sym());
      out += '(';
      break;
    case Kind::Xor:
      out += "xor{";
      break;
  }
  bool first = true;
  for (const Term& k : t.kids()) {
    if (!first) out += ',';
    first = false;
    render_to(k, out);
  }
  out += t.kind() == Kind::Xor ? '}' : ')';
}

}  // namespace detail

inline std::string render(const Term& t) {
  std::string s;
  detail::render_to(t, s);
  return s;
}

inline std::vector<Term> xor_atoms(const Term& t) {
  if (t.kind() == Kind::Xor) return {t.kids().begin(), t.kids().end()};
  if (t.is_zero()) return {};
  return {t};
}

inline void collect_subterms(const Term& t, std::vector<Term>& out) {
  out.push_back(t);
  for (const Term& k : t.kids()) collect_subterms(k, out);
}

}  // namespace akalab
