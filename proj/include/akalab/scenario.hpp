#pragma once

// Scenario engine: wires UE, SN and HN roles over the radio and SN–HN
// channels, applies compromises, records traces, and searches attacker
// interleavings depth-first within the configured bounds.

#include <akalab/config.hpp>
#include <akalab/deduction.hpp>
#include <akalab/properties.hpp>
#include <akalab/protocol.hpp>
#include <akalab/term_parse.hpp>
#include <akalab/trace.hpp>

#include <algorithm>
#include <charconv>
#include <functional>
#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace akalab {

enum class RadioType { Suci, Challenge, UEReply, SnConf, UeConf };
enum class SnhnType { Req, Resp, Resync, Challenge, Final };

inline std::string_view snhn_type_name(SnhnType t) {
  switch (t) {
    case SnhnType::Req: return "req";
    case SnhnType::Resp: return "resp";
    case SnhnType::Resync: return "resync";
    case SnhnType::Challenge: return "challenge";
    case SnhnType::Final: return "final";
  }
  return "?";
}

inline std::optional<SnhnType> snhn_type_from_name(std::string_view s) {
  for (SnhnType t : {SnhnType::Req, SnhnType::Resp, SnhnType::Resync, SnhnType::Challenge, SnhnType::Final})
    if (snhn_type_name(t) == s) return t;
  return std::nullopt;
}

inline bool snhn_to_hn(SnhnType t) { return t == SnhnType::Req || t == SnhnType::Resp || t == SnhnType::Resync; }

/// A role instance address: a UE, an SN session, an HN or an HN session.
struct Endpoint {
  enum class Kind { None, UE, SN, HN } kind = Kind::None;
  int idx = -1;
  int sess = -1;

  static Endpoint ue(int u) { return {Kind::UE, u, -1}; }
  static Endpoint sn(int i, int s) { return {Kind::SN, i, s}; }
  static Endpoint hn(int j, int h = -1) { return {Kind::HN, j, h}; }

  auto operator<=>(const Endpoint&) const = default;
};

inline std::string to_string(const Endpoint& e) {
  switch (e.kind) {
    case Endpoint::Kind::None: return "-";
    case Endpoint::Kind::UE: return "ue" + std::to_string(e.idx);
    case Endpoint::Kind::SN: return "sn_" + std::to_string(e.idx) + "/" + std::to_string(e.sess);
    case Endpoint::Kind::HN:
      return "hn_" + std::to_string(e.idx) + (e.sess >= 0 ? "/" + std::to_string(e.sess) : "");
  }
  return "?";
}

inline Endpoint parse_endpoint(std::string_view s) {
  auto num = [&](std::string_view v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
      throw Error(Errc::ScriptInvalid, "bad endpoint '" + std::string(s) + "'");
    return out;
  };
  auto split = [&](std::string_view rest, Endpoint::Kind k) {
    auto slash = rest.find('/');
    Endpoint e{k, num(rest.substr(0, slash)), -1};
    if (slash != std::string_view::npos) e.sess = num(rest.substr(slash + 1));
    return e;
  };
  if (s.starts_with("ue")) return Endpoint::ue(num(s.substr(2)));
  if (s.starts_with("sn_")) {
    Endpoint e = split(s.substr(3), Endpoint::Kind::SN);
    if (e.sess < 0) throw Error(Errc::ScriptInvalid, "SN endpoint needs a session: " + std::string(s));
    return e;
  }
  if (s.starts_with("hn_")) return split(s.substr(3), Endpoint::Kind::HN);
  throw Error(Errc::ScriptInvalid, "bad endpoint '" + std::string(s) + "'");
}

enum class ActKind { Start, Deliver, Inject, SnhnDeliver, SnhnInject, LateReveal, Auto };

/// One scheduler or attacker choice.
struct Action {
  ActKind kind = ActKind::Auto;
  int ue = -1;        // Start, LateReveal
  int sn = -1;        // Start (believed SN), SnhnInject (channel SN)
  int hn = -1;        // SnhnInject
  int msg = -1;       // Deliver: radio index; SnhnDeliver: pending message id
  Endpoint to;        // receiver
  SnhnType stype = SnhnType::Req;
  std::optional<Term> term;  // Inject, SnhnInject
};

inline std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActKind::Start: return "start ue" + std::to_string(a.ue) + " sn_" + std::to_string(a.sn);
    case ActKind::Deliver: return "deliver #" + std::to_string(a.msg) + " " + to_string(a.to);
    case ActKind::Inject: return "inject " + to_string(a.to) + " " + render(*a.term);
    case ActKind::SnhnDeliver: return "snhn @" + std::to_string(a.msg) + " " + to_string(a.to);
    case ActKind::SnhnInject:
      return "snhn-inject " + std::string(snhn_type_name(a.stype)) + " sn_" + std::to_string(a.sn) + " hn_" +
             std::to_string(a.hn) + " " + to_string(a.to) + " " + render(*a.term);
    case ActKind::LateReveal: return "reveal-k ue" + std::to_string(a.ue);
    case ActKind::Auto: return "auto";
  }
  return "?";
}

inline Action parse_action(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> tok;
  for (std::string w; is >> w;) tok.push_back(w);
  auto bad = [&] { return Error(Errc::ScriptInvalid, "bad action '" + text + "'"); };
  if (tok.empty()) throw bad();
  auto num_after = [&](const std::string& w, std::size_t skip) {
    try {
      return std::stoi(w.substr(skip));
    } catch (const std::exception&) {
      throw bad();
    }
  };
  auto term = [&](const std::string& w) {
    try {
      return parse_term(w);
    } catch (const Error&) {
      throw bad();
    }
  };
  Action a;
  const std::string& k = tok[0];
  if (k == "auto" && tok.size() == 1) return a;
  if (k == "start" && tok.size() == 3 && tok[1].starts_with("ue") && tok[2].starts_with("sn_")) {
    a.kind = ActKind::Start;
    a.ue = num_after(tok[1], 2);
    a.sn = num_after(tok[2], 3);
    return a;
  }
  if (k == "deliver" && tok.size() == 3 && tok[1].starts_with("#")) {
    a.kind = ActKind::Deliver;
    a.msg = num_after(tok[1], 1);
    a.to = parse_endpoint(tok[2]);
    return a;
  }
  if (k == "inject" && tok.size() == 3) {
    a.kind = ActKind::Inject;
    a.to = parse_endpoint(tok[1]);
    a.term = term(tok[2]);
    return a;
  }
  if (k == "snhn" && tok.size() == 3 && tok[1].starts_with("@")) {
    a.kind = ActKind::SnhnDeliver;
    a.msg = num_after(tok[1], 1);
    a.to = parse_endpoint(tok[2]);
    return a;
  }
  if (k == "snhn-inject" && tok.size() == 6) {
    auto t = snhn_type_from_name(tok[1]);
    if (!t || !tok[2].starts_with("sn_") || !tok[3].starts_with("hn_")) throw bad();
    a.kind = ActKind::SnhnInject;
    a.stype = *t;
    a.sn = num_after(tok[2], 3);
    a.hn = num_after(tok[3], 3);
    a.to = parse_endpoint(tok[4]);
    a.term = term(tok[5]);
    return a;
  }
  if (k == "reveal-k" && tok.size() == 2 && tok[1].starts_with("ue")) {
    a.kind = ActKind::LateReveal;
    a.ue = num_after(tok[1], 2);
    return a;
  }
  throw bad();
}

struct RadioMsg {
  Term term;
  RadioType type;
  Endpoint from;
  Endpoint intended;
  bool delivered = false;
};

struct SnhnMsg {
  int id = 0;
  int sn = 0;
  int hn = 0;
  SnhnType type = SnhnType::Req;
  Term term;
  int sn_sess = -1;  // SN session of this run (binding correlation)
  int hn_sess = -1;  // HN session of this run (binding correlation)
};

struct UEAgent {
  UEState st;
  int runs = 0;
  Endpoint reply_to;           // SN session that sent the challenge being answered
  std::optional<Term> last_accepted;  // last accepted SQN, for the monotonicity assertion
};

/// Complete mutable state of one scenario run.
struct World {
  std::vector<UEAgent> ues;
  std::vector<SNState> sns;
  std::vector<HNState> hns;
  std::map<std::pair<int, int>, int> sn_link;       // SN session → HN session of its challenge
  std::map<std::pair<int, int>, Endpoint> sn_peer;  // SN session → UE that sent its SUCI
  std::vector<RadioMsg> radio;
  std::vector<SnhnMsg> snhn;  // in flight
  int next_snhn = 0;
  KnowledgeBase kb;
  Trace trace;
  std::size_t injections = 0;
  std::size_t steps = 0;
  std::set<int> late_revealed;
  bool full_trace = true;  // false: keep only claims, reveals and assertions
};

struct ExploreStats {
  std::size_t states = 0;
  std::size_t injections_tried = 0;
  std::size_t assertion_failures = 0;
  double wall_ms = 0;
};

struct Verdict {
  PropertyId prop;
  bool attack = false;
  Trace trace;  // attack trace when `attack`
  ExploreStats stats;
};

class Engine {
 public:
  explicit Engine(ScenarioConfig cfg, bool allow_late_reveal = false)
      : cfg_(std::move(cfg)), late_reveal_(allow_late_reveal) {
    validate(cfg_);
    FreshSupply names(cfg_.seed);
    for (int j = 0; j < cfg_.n_hns; ++j) {
      hn_ids_.push_back(Term::constant("hn_" + std::to_string(j)));
      hn_sks_.push_back(names.fresh("skhn"));
    }
    for (int i = 0; i < cfg_.n_sns; ++i) sn_names_.push_back(Term::constant("sn_" + std::to_string(i)));
    for (int u = 0; u < cfg_.n_subscribers; ++u) {
      int home = u % cfg_.n_hns;
      Term imsi = names.fresh("imsi");
      supis_.push_back(pair(imsi, hn_ids_[home]));
      keys_.push_back(names.fresh("k"));
      homes_.push_back(home);
    }
    adv_ = names.fresh("adv");
    first_fresh_ = names.peek();
  }

  const ScenarioConfig& config() const { return cfg_; }
  const Term& supi(int u) const { return supis_.at(static_cast<std::size_t>(u)); }
  const Term& key(int u) const { return keys_.at(static_cast<std::size_t>(u)); }
  const Term& sn_name(int i) const { return sn_names_.at(static_cast<std::size_t>(i)); }
  const Term& adversary_nonce() const { return adv_; }

  World initial(bool full_trace = true) const {
    World w;
    w.full_trace = full_trace;
    w.kb = KnowledgeBase(cfg_.bounds.deduction_depth);
    for (int j = 0; j < cfg_.n_hns; ++j) {
      HNState h{hn_ids_[idx(j)], hn_sks_[idx(j)], {}, {}};
      for (int u = 0; u < cfg_.n_subscribers; ++u)
        if (homes_[idx(u)] == j) h.subscribers[supis_[idx(u)]] = HNSubscriber{keys_[idx(u)], Term::nat(base(u), 1)};
      w.hns.push_back(std::move(h));
      w.kb.observe(pk(hn_sks_[idx(j)]));
    }
    for (int i = 0; i < cfg_.n_sns; ++i) {
      SNState s{sn_names_[idx(i)], {}};
      for (int k = 0; k < cfg_.n_sessions; ++k) s.sessions[k] = SNSession{};
      w.sns.push_back(std::move(s));
    }
    for (int u = 0; u < cfg_.n_subscribers; ++u) {
      UEAgent a;
      a.st.record = SubscriberRecord{supis_[idx(u)], keys_[idx(u)], Term::nat(base(u), 0), hn_ids_[idx(homes_[idx(u)])]};
      a.st.pk_hn = pk(hn_sks_[idx(homes_[idx(u)])]);
      a.st.sn_name = sn_names_[0];
      w.ues.push_back(std::move(a));
    }
    w.kb.observe(adv_);
    for (int j = 0; j < cfg_.n_hns; ++j) claim_secret(w, hn_label(j), Role::HN, SecretItem::SkHN, hn_sks_[idx(j)]);
    for (const Reveal& r : cfg_.reveals) {
      int n = r.kind == RevealKind::SkHN ? cfg_.n_hns : r.kind == RevealKind::CompromiseSN ? cfg_.n_sns : cfg_.n_subscribers;
      for (int t = 0; t < n; ++t) {
        if (r.target != -1 && r.target != t) continue;
        std::string who;
        switch (r.kind) {
          case RevealKind::K: w.kb.observe(keys_[idx(t)]); who = ue_label(t); break;
          case RevealKind::SkHN: w.kb.observe(hn_sks_[idx(t)]); who = hn_label(t); break;
          case RevealKind::Supi: w.kb.observe(supis_[idx(t)]); who = ue_label(t); break;
          case RevealKind::SqnBase: w.kb.reveal_base(base(t)); who = ue_label(t); break;
          case RevealKind::CompromiseSN: who = "sn_" + std::to_string(t); break;
        }
        Event e;
        e.ev = EvKind::Reveal;
        e.actor = "attacker";
        e.text = std::string(reveal_name(r.kind)) + ":" + who;
        w.trace.push_back(std::move(e));
      }
    }
    return w;
  }

  /// Applies one action. Returns false if it is not enabled in `w` (the world
  /// may then be partially modified and must be discarded).
  bool apply(World& w, const Action& a) const {
    switch (a.kind) {
      case ActKind::Start: return do_start(w, a);
      case ActKind::Deliver: return do_deliver(w, a);
      case ActKind::Inject: return do_inject(w, a);
      case ActKind::SnhnDeliver: return do_snhn_deliver(w, a);
      case ActKind::SnhnInject: return do_snhn_inject(w, a);
      case ActKind::LateReveal: return do_late_reveal(w, a);
      case ActKind::Auto: return do_auto(w);
    }
    return false;
  }

  /// Honest scheduling: the first pending delivery along the intended route.
  std::optional<Action> next_honest(const World& w) const {
    for (const SnhnMsg& m : w.snhn) {
      for (const Endpoint& t : snhn_targets(w, m, /*honest=*/true)) {
        Action a;
        a.kind = ActKind::SnhnDeliver;
        a.msg = m.id;
        a.to = t;
        return a;
      }
    }
    for (std::size_t i = 0; i < w.radio.size(); ++i) {
      const RadioMsg& m = w.radio[i];
      if (m.delivered) continue;
      Endpoint to = m.intended;
      if (to.kind == Endpoint::Kind::SN && to.sess < 0) to.sess = free_sn_session(w, to.idx);
      if (to.kind == Endpoint::Kind::None || (to.kind == Endpoint::Kind::SN && to.sess < 0)) continue;
      if (!accepts(w, to, m.type)) continue;
      Action a;
      a.kind = ActKind::Deliver;
      a.msg = static_cast<int>(i);
      a.to = to;
      return a;
    }
    return std::nullopt;
  }

  /// Every choice enabled in `w`, honest progress first.
  std::vector<Action> choices(const World& w) const {
    std::vector<Action> out;
    for (const SnhnMsg& m : w.snhn)
      for (const Endpoint& t : snhn_targets(w, m, false)) {
        Action a;
        a.kind = ActKind::SnhnDeliver;
        a.msg = m.id;
        a.to = t;
        out.push_back(a);
      }
    auto receivers = radio_receivers(w);
    for (std::size_t i = 0; i < w.radio.size(); ++i) {
      if (w.radio[i].delivered) continue;
      for (const auto& [to, type] : receivers) {
        if (type != w.radio[i].type) continue;
        Action a;
        a.kind = ActKind::Deliver;
        a.msg = static_cast<int>(i);
        a.to = to;
        out.push_back(a);
      }
    }
    for (int u = 0; u < cfg_.n_subscribers; ++u) {
      if (!startable(w, u)) continue;
      for (int i = 0; i < cfg_.n_sns; ++i) {
        Action a;
        a.kind = ActKind::Start;
        a.ue = u;
        a.sn = i;
        out.push_back(a);
      }
    }
    if (late_reveal_)
      for (int u = 0; u < cfg_.n_subscribers; ++u)
        if (!w.late_revealed.contains(u) && w.ues[idx(u)].st.phase == UEPhase::Done) {
          Action a;
          a.kind = ActKind::LateReveal;
          a.ue = u;
          out.push_back(a);
        }
    if (w.injections < cfg_.bounds.max_injections) {
      for (const auto& [to, type] : receivers)
        for (const Term& t : radio_candidates(w, to, type)) {
          Action a;
          a.kind = ActKind::Inject;
          a.to = to;
          a.term = t;
          out.push_back(a);
        }
      snhn_injections(w, out);
    }
    return out;
  }

  /// Canonical digest of the state relevant to future behaviour and claims.
  std::pair<std::uint64_t, std::uint64_t> state_key(const World& w) const {
    std::vector<std::uint64_t> v;
    auto put = [&](std::uint64_t x) { v.push_back(x); };
    auto opt = [&](const std::optional<Term>& t) { put(t ? t->hash() : 0x9e37); };
    for (const UEAgent& a : w.ues) {
      put(static_cast<std::uint64_t>(a.st.phase));
      put(static_cast<std::uint64_t>(a.runs));
      put(a.st.sn_name.hash());
      put(a.st.record.sqn.offset());
      opt(a.st.k_seaf);
      opt(a.st.r);
      opt(a.st.session_suci_nonce);
      put(static_cast<std::uint64_t>(a.reply_to.kind) * 1000003 + static_cast<std::uint64_t>(a.reply_to.idx + 1) * 1009 +
          static_cast<std::uint64_t>(a.reply_to.sess + 1));
    }
    for (const SNState& s : w.sns)
      for (const auto& [sid, x] : s.sessions) {
        put(static_cast<std::uint64_t>(x.phase));
        opt(x.suci);
        opt(x.r);
        opt(x.autn);
        opt(x.hxres);
        opt(x.k_seaf);
        opt(x.supi);
      }
    for (const HNState& h : w.hns) {
      for (const auto& [supi, sub] : h.subscribers) put(sub.sqn_hn.offset());
      for (const HNSession& s : h.sessions) {
        put(static_cast<std::uint64_t>(s.phase));
        put(s.r.hash());
        put(s.suci.hash());
        put(s.sn_name.hash());
      }
    }
    for (const auto& [k, h] : w.sn_link) put(static_cast<std::uint64_t>(k.first * 7919 + k.second * 31 + h));
    std::vector<std::uint64_t> items;
    for (const SnhnMsg& m : w.snhn)
      items.push_back(mix(m.term.hash(), static_cast<std::uint64_t>(m.sn * 131 + m.hn * 17 + static_cast<int>(m.type)) +
                                             static_cast<std::uint64_t>((m.sn_sess + 2) * 100003 + (m.hn_sess + 2) * 7)));
    std::sort(items.begin(), items.end());
    put(0xabcdef);
    v.insert(v.end(), items.begin(), items.end());
    items.clear();
    for (const RadioMsg& m : w.radio)
      items.push_back(mix(m.term.hash(), static_cast<std::uint64_t>(m.type) * 2 + (m.delivered ? 1 : 0) +
                                             static_cast<std::uint64_t>(m.intended.idx + 2) * 1000 +
                                             static_cast<std::uint64_t>(m.intended.sess + 2) * 100000));
    std::sort(items.begin(), items.end());
    put(0xfedcba);
    v.insert(v.end(), items.begin(), items.end());
    items.clear();
    for (const Term& t : w.kb.observed()) items.push_back(t.hash());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    put(0x123456);
    v.insert(v.end(), items.begin(), items.end());
    items.clear();
    for (const Event& e : w.trace) {
      if (!e.is_claim() && e.ev != EvKind::StateAssert && e.ev != EvKind::Reveal) continue;
      std::hash<std::string_view> sh;
      std::uint64_t h = mix(mix(sh(e.actor), sh(e.peer)), sh(e.text));
      h = mix(h, static_cast<std::uint64_t>(e.ev) * 64 + static_cast<std::uint64_t>(e.a) * 16 +
                     static_cast<std::uint64_t>(e.b) * 4 + static_cast<std::uint64_t>(e.data) +
                     static_cast<std::uint64_t>(e.item) * 1024);
      if (e.term) h = mix(h, e.term->hash());
      items.push_back(h);
    }
    std::sort(items.begin(), items.end());
    put(0x654321);
    v.insert(v.end(), items.begin(), items.end());
    std::uint64_t a = 1469598103934665603ull, b = 0x84222325cbf29ce4ull;
    for (std::uint64_t x : v) {
      a = (a ^ x) * 1099511628211ull;
      b = mix(b, x);
    }
    return {a, b};
  }

  std::string ue_label(int u) const { return "ue" + std::to_string(u); }
  std::string hn_label(int j) const { return "hn_" + std::to_string(j); }

  /// Agent label for a SUPI term, or its rendering if it belongs to nobody.
  std::string supi_label(const Term& s) const {
    for (int u = 0; u < cfg_.n_subscribers; ++u)
      if (supis_[idx(u)] == s) return ue_label(u);
    return render(s);
  }

  bool compromised_sn(int i) const { return cfg_.reveals_any(RevealKind::CompromiseSN, i); }

 private:
  static std::size_t idx(int i) { return static_cast<std::size_t>(i); }
  BaseId base(int u) const { return BaseId{ue_label(u)}; }

  static std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h * 0xff51afd7ed558ccdull;
  }

  int hn_index(const Term& id) const {
    for (int j = 0; j < cfg_.n_hns; ++j)
      if (hn_ids_[idx(j)] == id) return j;
    return -1;
  }

  int sn_index(const Term& name) const {
    for (int i = 0; i < cfg_.n_sns; ++i)
      if (sn_names_[idx(i)] == name) return i;
    return -1;
  }

  // --- trace helpers -------------------------------------------------------

  static void push(World& w, Event e) {
    if (!w.full_trace && !e.is_claim() && e.ev != EvKind::Reveal && e.ev != EvKind::StateAssert) return;
    w.trace.push_back(std::move(e));
  }

  static void claim_secret(World& w, const std::string& actor, Role role, SecretItem item, const Term& t) {
    Event e;
    e.ev = EvKind::ClaimSecret;
    e.actor = actor;
    e.a = role;
    e.item = item;
    e.term = t;
    push(w, std::move(e));
  }

  // `actor` in role `b` runs with `peer` in role `a`, for each listed datum.
  static void running(World& w, const std::string& actor, const std::string& peer, Role a, Role b,
                      const std::vector<std::pair<DataKind, Term>>& data) {
    for (const auto& [d, t] : data) {
      Event e;
      e.ev = EvKind::ClaimRunning;
      e.actor = actor;
      e.peer = peer;
      e.a = a;
      e.b = b;
      e.data = d;
      e.term = t;
      push(w, std::move(e));
    }
  }

  // `actor` in role `a` commits to `peer` in role `b`.
  static void commit(World& w, const std::string& actor, const std::string& peer, Role a, Role b,
                     const std::vector<std::pair<DataKind, Term>>& data) {
    for (const auto& [d, t] : data) {
      Event e;
      e.ev = EvKind::ClaimCommit;
      e.actor = actor;
      e.peer = peer;
      e.a = a;
      e.b = b;
      e.data = d;
      e.term = t;
      push(w, std::move(e));
    }
  }

  static void state_assert(World& w, const std::string& actor, const std::string& what) {
    Event e;
    e.ev = EvKind::StateAssert;
    e.actor = actor;
    e.text = what;
    push(w, std::move(e));
  }

  void send_radio(World& w, const Endpoint& from, RadioType type, const Term& t, const Endpoint& intended) const {
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Send;
      e.actor = to_string(from);
      e.channel = "radio";
      e.term = t;
      push(w, std::move(e));
    }
    w.radio.push_back(RadioMsg{t, type, from, intended, false});
    w.kb.observe(t);
  }

  void send_snhn(World& w, int sn, int hn, SnhnType type, const Term& t, int sn_sess, int hn_sess) const {
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Send;
      e.actor = snhn_to_hn(type) ? to_string(Endpoint::sn(sn, sn_sess)) : to_string(Endpoint::hn(hn, hn_sess));
      e.channel = "snhn:sn_" + std::to_string(sn) + "-hn_" + std::to_string(hn) + ":" + std::string(snhn_type_name(type));
      e.term = t;
      push(w, std::move(e));
    }
    w.snhn.push_back(SnhnMsg{w.next_snhn++, sn, hn, type, t, sn_sess, hn_sess});
    if (compromised_sn(sn)) w.kb.observe(t);
  }

  // --- enabling conditions -------------------------------------------------

  bool startable(const World& w, int u) const {
    const UEAgent& a = w.ues[idx(u)];
    if (a.runs >= cfg_.n_sessions) return false;
    return a.st.phase == UEPhase::Idle || a.st.phase == UEPhase::Done || a.st.phase == UEPhase::Failed;
  }

  int free_sn_session(const World& w, int i) const {
    for (const auto& [sid, s] : w.sns[idx(i)].sessions)
      if (s.phase == SNPhase::AwaitSuci) return sid;
    return -1;
  }

  bool accepts(const World& w, const Endpoint& to, RadioType type) const {
    if (to.kind == Endpoint::Kind::UE) {
      if (to.idx < 0 || to.idx >= cfg_.n_subscribers) return false;
      UEPhase p = w.ues[idx(to.idx)].st.phase;
      return (p == UEPhase::AwaitChallenge && type == RadioType::Challenge) ||
             (p == UEPhase::AwaitKeyConf && type == RadioType::SnConf);
    }
    if (to.kind == Endpoint::Kind::SN) {
      if (to.idx < 0 || to.idx >= cfg_.n_sns) return false;
      auto it = w.sns[idx(to.idx)].sessions.find(to.sess);
      if (it == w.sns[idx(to.idx)].sessions.end()) return false;
      SNPhase p = it->second.phase;
      // New sessions are opened in order, so only the first free one is addressable.
      if (p == SNPhase::AwaitSuci) return type == RadioType::Suci && free_sn_session(w, to.idx) == to.sess;
      return (p == SNPhase::AwaitUEResponse && type == RadioType::UEReply) ||
             (p == SNPhase::AwaitKeyConf && type == RadioType::UeConf);
    }
    return false;
  }

  std::vector<std::pair<Endpoint, RadioType>> radio_receivers(const World& w) const {
    std::vector<std::pair<Endpoint, RadioType>> out;
    for (int u = 0; u < cfg_.n_subscribers; ++u) {
      UEPhase p = w.ues[idx(u)].st.phase;
      if (p == UEPhase::AwaitChallenge) out.emplace_back(Endpoint::ue(u), RadioType::Challenge);
      if (p == UEPhase::AwaitKeyConf) out.emplace_back(Endpoint::ue(u), RadioType::SnConf);
    }
    for (int i = 0; i < cfg_.n_sns; ++i) {
      int f = free_sn_session(w, i);
      if (f >= 0) out.emplace_back(Endpoint::sn(i, f), RadioType::Suci);
      for (const auto& [sid, s] : w.sns[idx(i)].sessions) {
        if (s.phase == SNPhase::AwaitUEResponse) out.emplace_back(Endpoint::sn(i, sid), RadioType::UEReply);
        if (s.phase == SNPhase::AwaitKeyConf) out.emplace_back(Endpoint::sn(i, sid), RadioType::UeConf);
      }
    }
    return out;
  }

  // Where an in-flight SN–HN message may be delivered. Without binding, any
  // session of the same SN–HN pair waiting for that message type qualifies.
  std::vector<Endpoint> snhn_targets(const World& w, const SnhnMsg& m, bool honest) const {
    std::vector<Endpoint> out;
    bool bind = cfg_.channel_binding || honest;
    switch (m.type) {
      case SnhnType::Req:
        out.push_back(Endpoint::hn(m.hn));
        break;
      case SnhnType::Resp:
      case SnhnType::Resync: {
        const HNState& h = w.hns[idx(m.hn)];
        for (std::size_t s = 0; s < h.sessions.size(); ++s) {
          if (h.sessions[s].phase != HNPhase::AwaitResponse || h.sessions[s].sn_name != sn_names_[idx(m.sn)]) continue;
          if (bind && static_cast<int>(s) != m.hn_sess) continue;
          out.push_back(Endpoint::hn(m.hn, static_cast<int>(s)));
        }
        break;
      }
      case SnhnType::Challenge:
      case SnhnType::Final: {
        SNPhase want = m.type == SnhnType::Challenge ? SNPhase::AwaitHNChallenge : SNPhase::AwaitHNConfirm;
        for (const auto& [sid, s] : w.sns[idx(m.sn)].sessions) {
          if (s.phase != want || !s.hn || *s.hn != hn_ids_[idx(m.hn)]) continue;
          if (bind && sid != m.sn_sess) continue;
          out.push_back(Endpoint::sn(m.sn, sid));
        }
        break;
      }
    }
    return out;
  }

  // --- attacker candidates -------------------------------------------------

  std::vector<Term> crafted_sucis(const World& w, int only_hn = -1) const {
    std::vector<Term> out;
    for (int u = 0; u < cfg_.n_subscribers; ++u) {
      int j = homes_[idx(u)];
      if (only_hn >= 0 && j != only_hn) continue;
      Term s = aka::suci(supis_[idx(u)], adv_, pk(hn_sks_[idx(j)]), hn_ids_[idx(j)]);
      if (w.kb.derivable(s)) out.push_back(s);
    }
    return out;
  }

  std::vector<Term> radio_candidates(const World& w, const Endpoint& to, RadioType type) const {
    std::vector<Term> cand;
    std::set<Term> fresh_terms;  // undelivered messages are offered as free deliveries instead
    for (const RadioMsg& m : w.radio)
      if (!m.delivered && m.type == type) fresh_terms.insert(m.term);
    auto replays = [&] {
      for (const RadioMsg& m : w.radio)
        if (m.delivered && m.type == type) cand.push_back(m.term);
    };
    switch (type) {
      case RadioType::Suci:
        replays();
        for (const Term& s : crafted_sucis(w)) cand.push_back(s);
        break;
      case RadioType::Challenge: {
        replays();
        std::vector<Term> rs, autns;
        for (const RadioMsg& m : w.radio)
          if (m.type == RadioType::Challenge && m.term.is_pair()) {
            rs.push_back(m.term.kid(0));
            autns.push_back(m.term.kid(1));
          }
        for (const SnhnMsg& m : w.snhn)
          if (m.type == SnhnType::Challenge && compromised_sn(m.sn))
            if (auto p = untuple(m.term, 4)) {
              cand.push_back(pair((*p)[0], (*p)[1]));
              rs.push_back((*p)[0]);
              autns.push_back((*p)[1]);
            }
        for (std::size_t i = 0; i < rs.size(); ++i)
          for (std::size_t j = 0; j < autns.size(); ++j)
            if (rs[i] != rs[j]) cand.push_back(pair(rs[i], autns[j]));
        const UEState& st = w.ues[idx(to.idx)].st;
        if (w.kb.derivable(st.record.k)) {
          Term sqn = nat_increment(st.record.sqn, 1);
          cand.push_back(pair(adv_, aka::autn(st.record.k, sqn, adv_, st.sn_name, cfg_.fixes)));
        }
        break;
      }
      case RadioType::SnConf: {
        replays();
        const UEState& st = w.ues[idx(to.idx)].st;
        if (st.k_seaf) cand.push_back(keyconf_step(st.k_seaf, ConfDirection::SNtoUE));
        break;
      }
      case RadioType::UEReply: {
        replays();
        cand.push_back(msg::mac_failure());
        const SNSession& s = w.sns[idx(to.idx)].sessions.at(to.sess);
        if (s.hxres && s.hxres->is_apply(Sym::sha256) && s.hxres->kid(0).is_pair())
          cand.push_back(s.hxres->kid(0).kid(1));
        break;
      }
      case RadioType::UeConf: {
        replays();
        const SNSession& s = w.sns[idx(to.idx)].sessions.at(to.sess);
        if (s.k_seaf) cand.push_back(keyconf_step(s.k_seaf, ConfDirection::UEtoSN));
        break;
      }
    }
    std::vector<Term> out;
    std::set<Term> seen;
    for (const Term& t : cand) {
      if (fresh_terms.contains(t) || !seen.insert(t).second) continue;
      if (w.kb.derivable(t)) out.push_back(t);
    }
    return out;
  }

  void snhn_injections(const World& w, std::vector<Action>& out) const {
    for (int i = 0; i < cfg_.n_sns; ++i) {
      if (!compromised_sn(i)) continue;
      for (int j = 0; j < cfg_.n_hns; ++j) {
        auto add = [&](SnhnType type, Endpoint to, const Term& t) {
          if (!w.kb.derivable(t)) return;
          Action a;
          a.kind = ActKind::SnhnInject;
          a.stype = type;
          a.sn = i;
          a.hn = j;
          a.to = to;
          a.term = t;
          out.push_back(a);
        };
        std::set<Term> sucis;
        for (const RadioMsg& m : w.radio)
          if (m.type == RadioType::Suci && m.term.is_pair() && m.term.kid(1) == hn_ids_[idx(j)]) sucis.insert(m.term);
        for (const Term& s : crafted_sucis(w, j)) sucis.insert(s);
        for (const Term& s : sucis) add(SnhnType::Req, Endpoint::hn(j), pair(s, sn_names_[idx(i)]));
        const HNState& h = w.hns[idx(j)];
        for (std::size_t s = 0; s < h.sessions.size(); ++s) {
          const HNSession& hs = h.sessions[s];
          if (hs.phase == HNPhase::AwaitResponse && hs.sn_name == sn_names_[idx(i)])
            add(SnhnType::Resp, Endpoint::hn(j, static_cast<int>(s)), pair(hs.xres_star, hs.suci));
        }
        for (const auto& [sid, s] : w.sns[idx(i)].sessions) {
          if (!s.hn || *s.hn != hn_ids_[idx(j)]) continue;
          if (s.phase == SNPhase::AwaitHNChallenge) {
            Term forged = tuple({adv_, pair(adv_, adv_), aka::hres_star(adv_, adv_), adv_});
            add(SnhnType::Challenge, Endpoint::sn(i, sid), forged);
          }
          if (s.phase == SNPhase::AwaitHNConfirm)
            for (int u = 0; u < cfg_.n_subscribers; ++u) {
              Term f = cfg_.fixes.supi_suci_pairing ? pair(supis_[idx(u)], *s.suci) : supis_[idx(u)];
              add(SnhnType::Final, Endpoint::sn(i, sid), f);
            }
        }
      }
    }
  }

  // --- actions -------------------------------------------------------------

  void act_event(World& w, const Action& a) const {
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Act;
      e.actor = a.kind == ActKind::Inject || a.kind == ActKind::SnhnInject || a.kind == ActKind::LateReveal
                    ? "attacker"
                    : "scheduler";
      e.text = to_string(a);
      push(w, std::move(e));
    }
  }

  bool do_start(World& w, const Action& a) const {
    if (a.ue < 0 || a.ue >= cfg_.n_subscribers || a.sn < 0 || a.sn >= cfg_.n_sns || !startable(w, a.ue)) return false;
    act_event(w, a);
    UEAgent& ag = w.ues[idx(a.ue)];
    ag.st.phase = UEPhase::Idle;
    ag.st.sn_name = sn_names_[idx(a.sn)];
    ag.runs++;
    ag.reply_to = Endpoint{};
    auto [st, suci] = ue_make_suci(ag.st, Term::fresh(first_fresh_ + static_cast<std::uint64_t>(a.ue * cfg_.n_sessions + ag.runs - 1), "rs"));
    ag.st = std::move(st);
    std::string me = ue_label(a.ue);
    claim_secret(w, me, Role::UE, SecretItem::Supi, ag.st.record.supi);
    claim_secret(w, me, Role::UE, SecretItem::K, ag.st.record.k);
    claim_secret(w, me, Role::UE, SecretItem::Sqn, ag.st.record.sqn);
    send_radio(w, Endpoint::ue(a.ue), RadioType::Suci, suci, Endpoint::sn(a.sn, -1));
    return true;
  }

  bool do_deliver(World& w, const Action& a) const {
    if (a.msg < 0 || static_cast<std::size_t>(a.msg) >= w.radio.size()) return false;
    RadioMsg& m = w.radio[idx(a.msg)];
    if (m.delivered || !accepts(w, a.to, m.type)) return false;
    m.delivered = true;
    act_event(w, a);
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Deliver;
      e.actor = "network";
      e.channel = "radio";
      e.to = to_string(a.to);
      e.term = m.term;
      push(w, std::move(e));
    }
    Term t = m.term;
    Endpoint from = m.from;
    receive_radio(w, a.to, t, from);
    return true;
  }

  std::optional<RadioType> expected_type(const World& w, const Endpoint& to) const {
    for (RadioType t : {RadioType::Suci, RadioType::Challenge, RadioType::UEReply, RadioType::SnConf, RadioType::UeConf})
      if (accepts(w, to, t)) return t;
    return std::nullopt;
  }

  bool do_inject(World& w, const Action& a) const {
    if (!a.term || !expected_type(w, a.to) || w.injections >= cfg_.bounds.max_injections) return false;
    if (!w.kb.derivable(*a.term)) return false;
    act_event(w, a);
    w.injections++;
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Inject;
      e.actor = "attacker";
      e.channel = "radio";
      e.to = to_string(a.to);
      e.term = *a.term;
      push(w, std::move(e));
    }
    receive_radio(w, a.to, normalize(*a.term), Endpoint{});
    return true;
  }

  void receive_radio(World& w, const Endpoint& to, const Term& t, const Endpoint& from) const {
    const FixToggles& fx = cfg_.fixes;
    if (to.kind == Endpoint::Kind::UE) {
      UEAgent& ag = w.ues[idx(to.idx)];
      std::string me = ue_label(to.idx);
      std::string sn_peer = ag.st.sn_name.label();
      std::string hn_peer = ag.st.record.home.label();
      if (ag.st.phase == UEPhase::AwaitChallenge) {
        ag.reply_to = from;
        Term r = t.is_pair() ? t.kid(0) : t;
        Term autn = t.is_pair() ? t.kid(1) : Term::zero();
        auto [st, reply] = ue_check_challenge(ag.st, r, autn, fx);
        ag.st = std::move(st);
        if (reply.verdict == UEVerdict::Accept) {
          if (ag.last_accepted && !nat_less(*ag.last_accepted, ag.st.record.sqn))
            state_assert(w, me, "sqn_ue not strictly increasing");
          ag.last_accepted = ag.st.record.sqn;
          const Term& ks = *ag.st.k_seaf;
          std::vector<std::pair<DataKind, Term>> data = {
              {DataKind::KSeaf, ks}, {DataKind::Supi, ag.st.record.supi}, {DataKind::SNname, ag.st.sn_name}};
          running(w, me, sn_peer, Role::SN, Role::UE, data);
          running(w, me, hn_peer, Role::HN, Role::UE, data);
          claim_secret(w, me, Role::UE, SecretItem::KSeaf, ks);
          if (!fx.key_confirmation) {
            commit(w, me, sn_peer, Role::UE, Role::SN, data);
            commit(w, me, hn_peer, Role::UE, Role::HN, data);
          }
        }
        send_radio(w, Endpoint::ue(to.idx), RadioType::UEReply, reply.message, ag.reply_to);
      } else if (ag.st.phase == UEPhase::AwaitKeyConf) {
        auto [st, ok, reply] = ue_check_keyconf(ag.st, t, fx);
        ag.st = std::move(st);
        if (ok) {
          std::vector<std::pair<DataKind, Term>> data = {
              {DataKind::KSeaf, *ag.st.k_seaf}, {DataKind::Supi, ag.st.record.supi}, {DataKind::SNname, ag.st.sn_name}};
          commit(w, me, sn_peer, Role::UE, Role::SN, data);
          commit(w, me, hn_peer, Role::UE, Role::HN, data);
          if (reply) send_radio(w, Endpoint::ue(to.idx), RadioType::UeConf, *reply, ag.reply_to);
        }
      }
      return;
    }
    // SN session
    SNState& sn = w.sns[idx(to.idx)];
    SNSession& s = sn.sessions.at(to.sess);
    std::string me = sn.sn_name.label();
    auto key = std::make_pair(to.idx, to.sess);
    switch (s.phase) {
      case SNPhase::AwaitSuci: {
        auto [st, req] = sn_receive_suci(sn, to.sess, t);
        sn = std::move(st);
        SNSession& s2 = sn.sessions.at(to.sess);
        int j = s2.hn ? hn_index(*s2.hn) : -1;
        if (!req || j < 0) {
          s2.phase = SNPhase::Aborted;
          return;
        }
        if (from.kind == Endpoint::Kind::UE) w.sn_peer[key] = from;
        send_snhn(w, to.idx, j, SnhnType::Req, *req, to.sess, -1);
        return;
      }
      case SNPhase::AwaitUEResponse: {
        auto [st, fwd] = sn_receive_ue_reply(sn, to.sess, t);
        sn = std::move(st);
        SNSession& s2 = sn.sessions.at(to.sess);
        int j = hn_index(*s2.hn);
        int h = w.sn_link.contains(key) ? w.sn_link.at(key) : -1;
        if (fwd.kind == SNReplyKind::Response) {
          running(w, me, hn_label(j), Role::HN, Role::SN,
                  {{DataKind::KSeaf, *s2.k_seaf}, {DataKind::SNname, sn.sn_name}});
          send_snhn(w, to.idx, j, SnhnType::Resp, *fwd.to_hn, to.sess, h);
        } else if (fwd.kind == SNReplyKind::Resync) {
          send_snhn(w, to.idx, j, SnhnType::Resync, *fwd.to_hn, to.sess, h);
        }
        return;
      }
      case SNPhase::AwaitKeyConf: {
        auto [st, ok] = sn_check_keyconf(sn, to.sess, t);
        sn = std::move(st);
        if (ok) {
          const SNSession& s2 = sn.sessions.at(to.sess);
          commit(w, me, supi_label(*s2.supi), Role::SN, Role::UE,
                 {{DataKind::KSeaf, *s2.k_seaf}, {DataKind::Supi, *s2.supi}, {DataKind::SNname, sn.sn_name}});
        }
        return;
      }
      default:
        return;
    }
  }

  bool do_snhn_deliver(World& w, const Action& a) const {
    auto it = std::find_if(w.snhn.begin(), w.snhn.end(), [&](const SnhnMsg& m) { return m.id == a.msg; });
    if (it == w.snhn.end()) return false;
    auto targets = snhn_targets(w, *it, false);
    if (std::find(targets.begin(), targets.end(), a.to) == targets.end()) return false;
    SnhnMsg m = *it;
    w.snhn.erase(it);
    act_event(w, a);
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Deliver;
      e.actor = "network";
      e.channel = "snhn:sn_" + std::to_string(m.sn) + "-hn_" + std::to_string(m.hn) + ":" +
                  std::string(snhn_type_name(m.type));
      e.to = to_string(a.to);
      e.term = m.term;
      push(w, std::move(e));
    }
    receive_snhn(w, m, a.to);
    return true;
  }

  bool do_snhn_inject(World& w, const Action& a) const {
    if (!a.term || a.sn < 0 || a.sn >= cfg_.n_sns || a.hn < 0 || a.hn >= cfg_.n_hns) return false;
    if (!compromised_sn(a.sn) || w.injections >= cfg_.bounds.max_injections) return false;
    if (!w.kb.derivable(*a.term)) return false;
    SnhnMsg m{-1, a.sn, a.hn, a.stype, normalize(*a.term), -1, -1};
    if (snhn_to_hn(a.stype)) {
      if (a.to.kind != Endpoint::Kind::HN || a.to.idx != a.hn) return false;
      m.hn_sess = a.to.sess;
    } else {
      if (a.to.kind != Endpoint::Kind::SN || a.to.idx != a.sn) return false;
      m.sn_sess = a.to.sess;
    }
    // Injected messages carry no session correlation but must reach a receiver
    // in the right phase.
    auto targets = snhn_targets_any(w, m);
    if (std::find(targets.begin(), targets.end(), a.to) == targets.end()) return false;
    act_event(w, a);
    w.injections++;
    if (w.full_trace) {
      Event e;
      e.ev = EvKind::Inject;
      e.actor = "attacker";
      e.channel = "snhn:sn_" + std::to_string(a.sn) + "-hn_" + std::to_string(a.hn) + ":" +
                  std::string(snhn_type_name(a.stype));
      e.to = to_string(a.to);
      e.term = m.term;
      push(w, std::move(e));
    }
    receive_snhn(w, m, a.to);
    return true;
  }

  std::vector<Endpoint> snhn_targets_any(const World& w, const SnhnMsg& m) const {
    std::vector<Endpoint> out;
    if (m.type == SnhnType::Req) return {Endpoint::hn(m.hn)};
    if (snhn_to_hn(m.type)) {
      const HNState& h = w.hns[idx(m.hn)];
      for (std::size_t s = 0; s < h.sessions.size(); ++s)
        if (h.sessions[s].phase == HNPhase::AwaitResponse && h.sessions[s].sn_name == sn_names_[idx(m.sn)])
          out.push_back(Endpoint::hn(m.hn, static_cast<int>(s)));
      return out;
    }
    SNPhase want = m.type == SnhnType::Challenge ? SNPhase::AwaitHNChallenge : SNPhase::AwaitHNConfirm;
    for (const auto& [sid, s] : w.sns[idx(m.sn)].sessions)
      if (s.phase == want && s.hn && *s.hn == hn_ids_[idx(m.hn)]) out.push_back(Endpoint::sn(m.sn, sid));
    return out;
  }

  void check_hn_monotone(World& w, const HNState& before, const HNState& after) const {
    for (const auto& [supi, sub] : after.subscribers) {
      const Term& old = before.subscribers.at(supi).sqn_hn;
      if (nat_less(sub.sqn_hn, old)) state_assert(w, after.id.label(), "sqn_hn decreased for " + supi_label(supi));
    }
  }

  void receive_snhn(World& w, const SnhnMsg& m, const Endpoint& to) const {
    const FixToggles& fx = cfg_.fixes;
    const std::string sn_lbl = sn_names_[idx(m.sn)].label();
    if (to.kind == Endpoint::Kind::HN) {
      HNState& hn = w.hns[idx(m.hn)];
      HNState before = hn;
      std::string me = hn_label(m.hn);
      switch (m.type) {
        case SnhnType::Req: {
          if (!m.term.is_pair()) return;
          try {
            auto [st, hsid, c] = hn_receive_request(hn, m.term.kid(0), sn_names_[idx(m.sn)], hn_nonce(m.hn, hn.sessions.size()), fx);
            hn = std::move(st);
            check_hn_monotone(w, before, hn);
            const HNSession& hs = hn.sessions[idx(hsid)];
            std::string ue = supi_label(hs.supi);
            running(w, me, ue, Role::UE, Role::HN,
                    {{DataKind::KSeaf, c.k_seaf}, {DataKind::Supi, hs.supi}, {DataKind::SNname, hs.sn_name}});
            running(w, me, sn_lbl, Role::SN, Role::HN, {{DataKind::KSeaf, c.k_seaf}, {DataKind::SNname, hs.sn_name}});
            claim_secret(w, me, Role::HN, SecretItem::KSeaf, c.k_seaf);
            claim_secret(w, me, Role::HN, SecretItem::K, hn.subscribers.at(hs.supi).k);
            claim_secret(w, me, Role::HN, SecretItem::Supi, hs.supi);
            send_snhn(w, m.sn, m.hn, SnhnType::Challenge, c.message(), m.sn_sess, hsid);
          } catch (const Error&) {
            // Undecryptable or unknown SUCI: the HN ignores the request.
          }
          return;
        }
        case SnhnType::Resp: {
          // The SUCI travels with RES* so the HN can locate its session; a
          // response naming another SUCI does not belong here.
          if (!m.term.is_pair() || m.term.kid(1) != hn.sessions[idx(to.sess)].suci) return;
          try {
            auto [st, final_msg] = hn_check_response(hn, to.sess, m.term.kid(0), fx);
            hn = std::move(st);
          } catch (const Error& e) {
            if (e.code() != Errc::Mismatch) throw;
            hn.sessions[idx(to.sess)].phase = HNPhase::Aborted;
            return;
          }
          const HNSession& hs = hn.sessions[idx(to.sess)];
          std::string ue = supi_label(hs.supi);
          commit(w, me, ue, Role::HN, Role::UE,
                 {{DataKind::KSeaf, hs.k_seaf}, {DataKind::Supi, hs.supi}, {DataKind::SNname, hs.sn_name}});
          commit(w, me, sn_lbl, Role::HN, Role::SN, {{DataKind::KSeaf, hs.k_seaf}, {DataKind::SNname, hs.sn_name}});
          running(w, me, sn_lbl, Role::SN, Role::HN, {{DataKind::Supi, hs.supi}});
          Term final_msg = fx.supi_suci_pairing ? pair(hs.supi, hs.suci) : hs.supi;
          send_snhn(w, m.sn, m.hn, SnhnType::Final, final_msg, m.sn_sess, to.sess);
          return;
        }
        case SnhnType::Resync: {
          if (!m.term.is_pair()) return;
          hn = hn_resync(hn, to.sess, m.term.kid(1));
          check_hn_monotone(w, before, hn);
          return;
        }
        default:
          return;
      }
    }
    SNState& sn = w.sns[idx(m.sn)];
    std::string me = sn.sn_name.label();
    auto key = std::make_pair(m.sn, to.sess);
    Endpoint ue_ep = w.sn_peer.contains(key) ? w.sn_peer.at(key) : Endpoint{};
    if (m.type == SnhnType::Challenge) {
      auto [st, out] = sn_receive_challenge(sn, to.sess, m.term);
      sn = std::move(st);
      if (!out) return;
      w.sn_link[key] = m.hn_sess;
      const SNSession& s = sn.sessions.at(to.sess);
      claim_secret(w, me, Role::SN, SecretItem::KSeaf, *s.k_seaf);
      if (!fx.key_confirmation) {
        // Without key confirmation the SN's last message to the UE is the
        // challenge; it runs with whoever is concealed in the SUCI.
        Term ghost = concealed_supi(*s.suci);
        running(w, me, supi_label(ghost), Role::UE, Role::SN,
                {{DataKind::KSeaf, *s.k_seaf}, {DataKind::Supi, ghost}, {DataKind::SNname, sn.sn_name}});
      }
      send_radio(w, Endpoint::sn(m.sn, to.sess), RadioType::Challenge, *out, ue_ep);
      return;
    }
    if (m.type == SnhnType::Final) {
      auto [st, fin] = sn_receive_final(sn, to.sess, m.term, fx);
      sn = std::move(st);
      if (!fin.accepted) return;
      const SNSession& s = sn.sessions.at(to.sess);
      std::vector<std::pair<DataKind, Term>> data = {
          {DataKind::KSeaf, *s.k_seaf}, {DataKind::Supi, *s.supi}, {DataKind::SNname, sn.sn_name}};
      commit(w, me, hn_label(m.hn), Role::SN, Role::HN, data);
      std::string ue = supi_label(*s.supi);
      if (fin.conf) {
        running(w, me, ue, Role::UE, Role::SN, data);
        if (!fx.ue_sends_conf()) commit(w, me, ue, Role::SN, Role::UE, data);
        send_radio(w, Endpoint::sn(m.sn, to.sess), RadioType::SnConf, *fin.conf, ue_ep);
      } else {
        commit(w, me, ue, Role::SN, Role::UE, data);
      }
    }
  }

  // Nonces are numbered per agent rather than globally, so interleavings that
  // differ only in the order of independent steps reach the same state.
  Term hn_nonce(int j, std::size_t session) const {
    std::uint64_t slot = static_cast<std::uint64_t>(cfg_.n_subscribers * cfg_.n_sessions) +
                         static_cast<std::uint64_t>(j) * (cfg_.bounds.max_steps + 1) + session;
    return Term::fresh(first_fresh_ + slot, "r");
  }

  static Term concealed_supi(const Term& suci) {
    if (suci.is_pair() && suci.kid(0).is_apply(Sym::aenc) && suci.kid(0).kid(0).is_pair())
      return suci.kid(0).kid(0).kid(0);
    return suci;
  }

  bool do_late_reveal(World& w, const Action& a) const {
    if (!late_reveal_ || a.ue < 0 || a.ue >= cfg_.n_subscribers || w.late_revealed.contains(a.ue)) return false;
    if (w.ues[idx(a.ue)].st.phase != UEPhase::Done) return false;
    act_event(w, a);
    w.late_revealed.insert(a.ue);
    w.kb.observe(keys_[idx(a.ue)]);
    Event e;
    e.ev = EvKind::Reveal;
    e.actor = "attacker";
    e.text = "late:RevealK:" + ue_label(a.ue);
    push(w, std::move(e));
    return true;
  }

  bool do_auto(World& w) const {
    while (auto a = next_honest(w)) apply(w, *a);
    return true;
  }

  ScenarioConfig cfg_;
  bool late_reveal_;
  std::vector<Term> hn_ids_, hn_sks_, sn_names_, supis_, keys_;
  std::vector<int> homes_;
  Term adv_;
  std::uint64_t first_fresh_ = 0;
};

/// Searches for a violation of `prop`, checked after every step. Depth-first
/// with iterative deepening on the step count, so reported attacks use close
/// to the fewest actions while memory stays proportional to the depth.
inline Verdict explore(const ScenarioConfig& cfg, const PropertyId& prop) {
  auto t0 = std::chrono::steady_clock::now();
  Engine eng(cfg, prop.kind == PropKind::PFS);
  Verdict v;
  v.prop = prop;
  using Key = std::pair<std::uint64_t, std::uint64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return static_cast<std::size_t>(k.first ^ (k.second * 31)); }
  };
  std::unordered_map<Key, std::pair<std::size_t, std::size_t>, KeyHash> seen;  // → (injections, steps)
  auto dominated = [&](const World& w) {
    auto [it, fresh] = seen.try_emplace(eng.state_key(w), w.injections, w.steps);
    if (fresh) return false;
    auto& [inj, steps] = it->second;
    if (inj <= w.injections && steps <= w.steps) return true;
    inj = std::min(inj, w.injections);
    steps = std::min(steps, w.steps);
    return false;
  };
  std::size_t limit = 0;
  bool cut = false;
  std::vector<Action> path;
  std::function<bool(const World&)> dfs = [&](const World& w) -> bool {
    v.stats.states++;
    for (const Action& a : eng.choices(w)) {
      World n = w;
      if (!eng.apply(n, a)) continue;
      n.steps++;
      path.push_back(a);
      if (a.kind == ActKind::Inject || a.kind == ActKind::SnhnInject) v.stats.injections_tried++;
      // A state seen before carries the same claims and knowledge, so it was
      // already checked.
      bool below = n.steps < cfg.bounds.max_steps && n.steps < limit;
      if (below && dominated(n)) {
        path.pop_back();
        continue;
      }
      if (!sqn_assertions_hold(n.trace)) v.stats.assertion_failures++;
      if (!holds(prop, n.trace, n.kb)) {
        v.attack = true;
        return true;
      }
      if (n.steps < cfg.bounds.max_steps && n.steps >= limit) cut = true;
      if (below && dfs(n)) return true;
      path.pop_back();
    }
    return false;
  };
  // The search keeps only the events properties look at; the full trace of
  // an attack is regenerated from the action path.
  World w0 = eng.initial(false);
  if (!holds(prop, w0.trace, w0.kb)) {
    v.attack = true;
  } else {
    for (limit = std::min<std::size_t>(12, cfg.bounds.max_steps);; limit = std::min(limit * 2, cfg.bounds.max_steps)) {
      seen.clear();
      cut = false;
      if (dfs(w0) || !cut || limit >= cfg.bounds.max_steps) break;
    }
  }
  if (v.attack) {
    World full = eng.initial(true);
    for (const Action& a : path) eng.apply(full, a);
    v.trace = std::move(full.trace);
  }
  v.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

/// Runs a script of actions; `auto` runs honest deliveries to quiescence.
/// An empty script is the honest schedule of run_honest.
inline World scripted_world(const ScenarioConfig& cfg, std::vector<Action> script, bool allow_late_reveal = false);

inline std::vector<Action> honest_script(const ScenarioConfig& cfg) {
  std::vector<Action> s;
  for (int run = 0; run < cfg.n_sessions; ++run)
    for (int u = 0; u < cfg.n_subscribers; ++u) {
      Action a;
      a.kind = ActKind::Start;
      a.ue = u;
      a.sn = u % cfg.n_sns;
      s.push_back(a);
      s.push_back(Action{});
    }
  return s;
}

inline World scripted_world(const ScenarioConfig& cfg, std::vector<Action> script, bool allow_late_reveal) {
  if (script.empty()) script = honest_script(cfg);
  Engine eng(cfg, allow_late_reveal);
  World w = eng.initial();
  for (const Action& a : script) {
    if (!eng.apply(w, a)) throw Error(Errc::ScriptInvalid, "action not enabled: " + to_string(a));
    w.steps++;
  }
  return w;
}

inline Trace scripted_run(const ScenarioConfig& cfg, const std::vector<Action>& script) {
  return scripted_world(cfg, script).trace;
}

/// The unique honest trace: every subscriber runs n_sessions times through
/// SN (u mod n_sns), with no attacker interference.
inline Trace run_honest(const ScenarioConfig& cfg) {
  validate(cfg);
  if (!cfg.reveals.empty()) throw Error(Errc::ConfigInvalid, "run_honest requires no reveals");
  std::vector<int> per_sn(static_cast<std::size_t>(cfg.n_sns), 0);
  for (int u = 0; u < cfg.n_subscribers; ++u) per_sn[static_cast<std::size_t>(u % cfg.n_sns)] += cfg.n_sessions;
  for (int n : per_sn)
    if (n > cfg.n_sessions)
      throw Error(Errc::ConfigInvalid, "run_honest needs at most one subscriber per SN");
  return scripted_run(cfg, {});
}

/// Re-executes the actions recorded in `trace` and checks that the same
/// events and the same verdict for `prop` come out.
inline Verdict replay_trace(const ScenarioConfig& cfg, const Trace& trace, const PropertyId& prop) {
  std::vector<Action> script;
  for (const Event& e : trace)
    if (e.ev == EvKind::Act) script.push_back(parse_action(e.text));
  bool late = std::any_of(trace.begin(), trace.end(), [](const Event& e) { return e.ev == EvKind::Reveal && e.text.starts_with("late:"); });
  World w;
  try {
    w = scripted_world(cfg, script.empty() ? std::vector<Action>{Action{}} : script, late || prop.kind == PropKind::PFS);
  } catch (const Error& e) {
    if (e.code() == Errc::ScriptInvalid) throw Error(Errc::TraceDiverged, e.what());
    throw;
  }
  if (trace_to_string(w.trace) != trace_to_string(trace))
    throw Error(Errc::TraceDiverged, "re-execution produced different events");
  Verdict v;
  v.prop = prop;
  v.attack = !holds(prop, w.trace, w.kb);
  if (v.attack) v.trace = w.trace;
  return v;
}

}  // namespace akalab
