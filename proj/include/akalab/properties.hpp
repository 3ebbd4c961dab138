#pragma once

// Security properties over traces: secrecy, aliveness, weak / non-injective /
// injective agreement, plus the identifiers used to name them.

#include <akalab/deduction.hpp>
#include <akalab/trace.hpp>

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace akalab {

enum class PropKind { Secrecy, PFS, Aliveness, WeakAgreement, NIAgreement, InjAgreement, Linkability, SqnInvariant };

struct PropertyId {
  PropKind kind = PropKind::Secrecy;
  SecretItem item = SecretItem::K;  // Secrecy, PFS
  Role a = Role::UE;                // committing role
  Role b = Role::SN;                // partner role
  DataKind data = DataKind::KSeaf;  // NI/Inj agreement
  std::optional<Role> pov;          // Secrecy, PFS: only claims by this role

  auto operator<=>(const PropertyId&) const = default;
};

inline std::string to_string(const PropertyId& p) {
  auto ab = [&] { return std::string(role_name(p.a)) + ":" + std::string(role_name(p.b)); };
  switch (p.kind) {
    case PropKind::Secrecy:
    case PropKind::PFS: {
      std::string s = (p.kind == PropKind::PFS ? "pfs:" : "secrecy:") + std::string(secret_name(p.item));
      if (p.pov) s += ":" + std::string(role_name(*p.pov));
      return s;
    }
    case PropKind::Aliveness: return "alive:" + ab();
    case PropKind::WeakAgreement: return "weak:" + ab();
    case PropKind::NIAgreement: return "niagree:" + ab() + ":" + std::string(data_name(p.data));
    case PropKind::InjAgreement: return "inj:" + ab() + ":" + std::string(data_name(p.data));
    case PropKind::Linkability: return "linkability";
    case PropKind::SqnInvariant: return "invariant:sqn";
  }
  return "?";
}

inline PropertyId parse_property(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  auto bad = [&]() -> Error { return Error(Errc::InvalidArgument, "bad property '" + std::string(text) + "'"); };
  PropertyId p;
  const std::string& head = parts[0];
  if (head == "linkability" && parts.size() == 1) { p.kind = PropKind::Linkability; return p; }
  if (head == "invariant" && parts.size() == 2 && parts[1] == "sqn") { p.kind = PropKind::SqnInvariant; return p; }
  if ((head == "secrecy" || head == "pfs") && (parts.size() == 2 || parts.size() == 3)) {
    auto i = secret_from_name(parts[1]);
    if (!i) throw bad();
    p.kind = head == "pfs" ? PropKind::PFS : PropKind::Secrecy;
    p.item = *i;
    if (parts.size() == 3) {
      p.pov = role_from_name(parts[2]);
      if (!p.pov) throw bad();
    }
    return p;
  }
  std::size_t want = (head == "alive" || head == "weak") ? 3 : (head == "niagree" || head == "inj") ? 4 : 0;
  if (want == 0 || parts.size() != want) throw bad();
  auto a = role_from_name(parts[1]);
  auto b = role_from_name(parts[2]);
  if (!a || !b || *a == *b) throw bad();
  p.a = *a;
  p.b = *b;
  if (head == "alive") p.kind = PropKind::Aliveness;
  if (head == "weak") p.kind = PropKind::WeakAgreement;
  if (want == 4) {
    auto d = data_from_name(parts[3]);
    if (!d || *d == DataKind::None) throw bad();
    p.kind = head == "inj" ? PropKind::InjAgreement : PropKind::NIAgreement;
    p.data = *d;
  }
  return p;
}

/// Agents named by a reveal or compromise event ("RevealK:ue0", "late:RevealK:ue0", ...).
inline std::set<std::string> compromised_agents(const Trace& t) {
  std::set<std::string> out;
  for (const Event& e : t)
    if (e.ev == EvKind::Reveal) {
      auto colon = e.text.rfind(':');
      if (colon != std::string::npos) out.insert(e.text.substr(colon + 1));
    }
  return out;
}

/// Whether claims involving compromised agents are skipped (the usual honesty
/// condition) or checked like any other.
enum class Honesty { Unconditional, HonestOnly };

namespace detail {

inline bool skip_claim(const Event& c, Honesty h, const std::set<std::string>& bad) {
  return h == Honesty::HonestOnly && (bad.contains(c.actor) || (!c.peer.empty() && bad.contains(c.peer)));
}

// Commits by role a toward role b, with the running claims they may match.
inline std::vector<std::vector<std::size_t>> agreement_candidates(const Trace& t, Role a, Role b,
                                                                  std::optional<DataKind> data,
                                                                  std::vector<std::size_t>& commits,
                                                                  Honesty h = Honesty::Unconditional) {
  std::vector<std::vector<std::size_t>> cand;
  std::set<std::string> bad = h == Honesty::HonestOnly ? compromised_agents(t) : std::set<std::string>{};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Event& c = t[i];
    if (c.ev != EvKind::ClaimCommit || c.a != a || c.b != b) continue;
    if (skip_claim(c, h, bad)) continue;
    if (data && c.data != *data) continue;
    commits.push_back(i);
    std::vector<std::size_t> ok;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const Event& r = t[j];
      if (r.ev != EvKind::ClaimRunning || r.a != a || r.b != b) continue;
      if (r.actor != c.peer || r.peer != c.actor) continue;
      if (data && (r.data != *data || !r.term || !c.term || *r.term != *c.term)) continue;
      ok.push_back(j);
    }
    cand.push_back(std::move(ok));
  }
  return cand;
}

// Maximum bipartite matching by augmenting paths; true if every commit matched.
inline bool perfect_matching(const std::vector<std::vector<std::size_t>>& cand) {
  std::map<std::size_t, std::size_t> owner;  // running index → commit
  std::function<bool(std::size_t, std::set<std::size_t>&)> augment = [&](std::size_t c,
                                                                         std::set<std::size_t>& seen) {
    for (std::size_t r : cand[c]) {
      if (!seen.insert(r).second) continue;
      auto it = owner.find(r);
      if (it == owner.end() || augment(it->second, seen)) {
        owner[r] = c;
        return true;
      }
    }
    return false;
  };
  for (std::size_t c = 0; c < cand.size(); ++c) {
    std::set<std::size_t> seen;
    if (!augment(c, seen)) return false;
  }
  return true;
}

}  // namespace detail

/// True iff no claimed secret of `item` is derivable from `kb`.
/// With `before_event`, only claims made before that trace index count (PFS);
/// with `pov`, only claims made by that role.
inline bool check_secrecy(const Trace& t, const KnowledgeBase& kb, SecretItem item,
                          std::size_t before_event = static_cast<std::size_t>(-1),
                          std::optional<Role> pov = std::nullopt, Honesty h = Honesty::Unconditional) {
  std::set<std::string> bad = h == Honesty::HonestOnly ? compromised_agents(t) : std::set<std::string>{};
  for (std::size_t i = 0; i < t.size() && i < before_event; ++i) {
    const Event& e = t[i];
    if (e.ev != EvKind::ClaimSecret || e.item != item || !e.term) continue;
    if (pov && e.a != *pov) continue;
    if (detail::skip_claim(e, h, bad)) continue;
    if (kb.derivable(*e.term)) return false;
  }
  return true;
}

inline bool check_aliveness(const Trace& t, Role a, Role b, Honesty h = Honesty::Unconditional) {
  std::set<std::string> bad = h == Honesty::HonestOnly ? compromised_agents(t) : std::set<std::string>{};
  for (const Event& c : t) {
    if (c.ev != EvKind::ClaimCommit || c.a != a || c.b != b) continue;
    if (detail::skip_claim(c, h, bad)) continue;
    bool found = false;
    for (const Event& r : t)
      if (r.ev == EvKind::ClaimRunning && r.actor == c.peer && r.b == b) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

inline bool check_weak_agreement(const Trace& t, Role a, Role b, Honesty h = Honesty::Unconditional) {
  std::vector<std::size_t> commits;
  for (const auto& c : detail::agreement_candidates(t, a, b, std::nullopt, commits, h))
    if (c.empty()) return false;
  return true;
}

inline bool check_ni_agreement(const Trace& t, Role a, Role b, DataKind data,
                               Honesty h = Honesty::Unconditional) {
  std::vector<std::size_t> commits;
  for (const auto& c : detail::agreement_candidates(t, a, b, data, commits, h))
    if (c.empty()) return false;
  return true;
}

inline bool check_inj_agreement(const Trace& t, Role a, Role b, DataKind data,
                                Honesty h = Honesty::Unconditional) {
  std::vector<std::size_t> commits;
  auto cand = detail::agreement_candidates(t, a, b, data, commits, h);
  return detail::perfect_matching(cand);
}

/// Index of the first late key reveal, or npos.
inline std::size_t first_late_reveal(const Trace& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].ev == EvKind::Reveal && t[i].text.starts_with("late:")) return i;
  return static_cast<std::size_t>(-1);
}

inline bool sqn_assertions_hold(const Trace& t) {
  for (const Event& e : t)
    if (e.ev == EvKind::StateAssert) return false;
  return true;
}

/// Evaluates a trace property. Linkability is not a trace property and is
/// reported as holding here.
inline bool holds(const PropertyId& p, const Trace& t, const KnowledgeBase& kb, Honesty h = Honesty::Unconditional) {
  constexpr auto all = static_cast<std::size_t>(-1);
  switch (p.kind) {
    case PropKind::Secrecy: return check_secrecy(t, kb, p.item, all, p.pov, h);
    case PropKind::PFS: {
      std::size_t late = first_late_reveal(t);
      return late == all || check_secrecy(t, kb, p.item, late, p.pov, h);
    }
    case PropKind::Aliveness: return check_aliveness(t, p.a, p.b, h);
    case PropKind::WeakAgreement: return check_weak_agreement(t, p.a, p.b, h);
    case PropKind::NIAgreement: return check_ni_agreement(t, p.a, p.b, p.data, h);
    case PropKind::InjAgreement: return check_inj_agreement(t, p.a, p.b, p.data, h);
    case PropKind::Linkability: return true;
    case PropKind::SqnInvariant: return sqn_assertions_hold(t);
  }
  return true;
}

}  // namespace akalab
