#pragma once

// Role state machines for the UE, SN and HN.
//
// Every step is a pure function of (state, input, fresh names) returning the
// successor state and the emitted message. Claims are emitted by the scenario
// engine, which owns the role states and knows where each step sits in a run.

#include <akalab/term.hpp>

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace akalab {

struct FixToggles {
  bool supi_suci_pairing = false;
  bool mac_binds_snname = false;
  bool unidirectional_keyconf = false;
  bool key_confirmation = true;

  bool ue_sends_conf() const { return key_confirmation && !unidirectional_keyconf; }
  auto operator<=>(const FixToggles&) const = default;
};

namespace msg {

inline Term mac_failure() { return Term::constant("Mac_Failure"); }
inline Term sync_failure() { return Term::constant("Sync_Failure"); }
inline Term ue_conf() { return Term::constant("UE_CONF"); }
inline Term sn_conf() { return Term::constant("SN_CONF"); }

}  // namespace msg

/// Counter-backed supply of fresh names; traces are reproducible from the seed.
class FreshSupply {
 public:
  explicit FreshSupply(std::uint64_t seed = 0) : next_(seed) {}
  Term fresh(std::string label) { return Term::fresh(next_++, std::move(label)); }
  std::uint64_t peek() const { return next_; }

 private:
  std::uint64_t next_;
};

// Cryptographic formulas shared by all roles.
namespace aka {

inline Term mac(const Term& k, const Term& sqn, const Term& r, const Term& sn_name,
                const FixToggles& fx) {
  return fx.mac_binds_snname ? f1(k, tuple({sqn, r, sn_name})) : f1(k, pair(sqn, r));
}
inline Term ak(const Term& k, const Term& r) { return f5(k, r); }
inline Term conc(const Term& k, const Term& sqn, const Term& r) { return xor_of(sqn, ak(k, r)); }
inline Term autn(const Term& k, const Term& sqn, const Term& r, const Term& sn_name,
                 const FixToggles& fx) {
  return pair(conc(k, sqn, r), mac(k, sqn, r, sn_name, fx));
}
inline Term ck_ik(const Term& k, const Term& r) { return pair(f3(k, r), f4(k, r)); }
inline Term res_star(const Term& k, const Term& r, const Term& sn_name) {
  return kdf(ck_ik(k, r), tuple({sn_name, r, f2(k, r)}));
}
inline Term hres_star(const Term& r, const Term& res) { return sha256(pair(r, res)); }
inline Term k_ausf(const Term& k, const Term& r, const Term& conc_v, const Term& sn_name) {
  return kdf(ck_ik(k, r), pair(sn_name, conc_v));
}
inline Term k_seaf(const Term& k, const Term& r, const Term& conc_v, const Term& sn_name) {
  return kdf(k_ausf(k, r, conc_v, sn_name), sn_name);
}
inline Term auts(const Term& k, const Term& sqn_ue, const Term& r) {
  return pair(xor_of(sqn_ue, f5star(k, r)), f1star(k, pair(sqn_ue, r)));
}
inline Term suci(const Term& supi, const Term& nonce, const Term& pk_hn, const Term& id_hn) {
  return pair(aenc(pair(supi, nonce), pk_hn), id_hn);
}

}  // namespace aka

struct SubscriberRecord {
  Term supi;
  Term k;
  Term sqn;   // Nat
  Term home;  // idHN constant

  auto operator<=>(const SubscriberRecord&) const = default;
};

enum class UEPhase { Idle, AwaitChallenge, AwaitKeyConf, Done, Failed };

struct UEState {
  SubscriberRecord record;
  Term pk_hn;
  Term sn_name;
  UEPhase phase = UEPhase::Idle;
  std::optional<Term> k_seaf;
  std::optional<Term> session_suci_nonce;
  std::optional<Term> r;
};

enum class UEVerdict { MacFailure, SyncFailure, Accept };

struct UEReply {
  UEVerdict verdict;
  Term message;
};

inline std::pair<UEState, Term> ue_make_suci(UEState st, const Term& fresh) {
  if (st.phase != UEPhase::Idle) throw Error(Errc::WrongPhase, "ue_make_suci outside Idle");
  Term suci = aka::suci(st.record.supi, fresh, st.pk_hn, st.record.home);
  st.phase = UEPhase::AwaitChallenge;
  st.session_suci_nonce = fresh;
  st.k_seaf.reset();
  st.r.reset();
  return {std::move(st), suci};
}

inline std::pair<UEState, UEReply> ue_check_challenge(UEState st, const Term& r, const Term& autn,
                                                      const FixToggles& fx) {
  if (st.phase != UEPhase::AwaitChallenge)
    throw Error(Errc::WrongPhase, "ue_check_challenge outside AwaitChallenge");
  const Term& k = st.record.k;
  auto fail = [&](UEVerdict v, Term m) {
    st.phase = UEPhase::Failed;
    return std::pair<UEState, UEReply>{std::move(st), UEReply{v, std::move(m)}};
  };
  if (!autn.is_pair()) return fail(UEVerdict::MacFailure, msg::mac_failure());
  const Term& xconc = autn.kid(0);
  Term xsqn = xor_of(aka::ak(k, r), xconc);
  if (aka::mac(k, xsqn, r, st.sn_name, fx) != autn.kid(1))
    return fail(UEVerdict::MacFailure, msg::mac_failure());
  // A valid MAC over something that is not this subscriber's counter cannot
  // come from the HN; the UE treats it like a MAC failure.
  if (xsqn.kind() != Kind::Nat || xsqn.base() != st.record.sqn.base())
    return fail(UEVerdict::MacFailure, msg::mac_failure());
  if (!nat_less(st.record.sqn, xsqn))
    return fail(UEVerdict::SyncFailure, pair(msg::sync_failure(), aka::auts(k, st.record.sqn, r)));
  st.record.sqn = xsqn;
  st.r = r;
  st.k_seaf = aka::k_seaf(k, r, xconc, st.sn_name);
  st.phase = fx.key_confirmation ? UEPhase::AwaitKeyConf : UEPhase::Done;
  return {std::move(st), UEReply{UEVerdict::Accept, aka::res_star(k, r, st.sn_name)}};
}

enum class ConfDirection { UEtoSN, SNtoUE };

/// Key-confirmation message for the given direction.
inline Term keyconf_step(const std::optional<Term>& k_seaf, ConfDirection dir) {
  if (!k_seaf) throw Error(Errc::KeyMissing, "key confirmation without K_SEAF");
  return kdf(*k_seaf, dir == ConfDirection::UEtoSN ? msg::ue_conf() : msg::sn_conf());
}

/// UE side of key confirmation. Returns the UE's own confirmation when the
/// roundtrip is bidirectional; the bool tells whether verification passed.
inline std::tuple<UEState, bool, std::optional<Term>> ue_check_keyconf(UEState st, const Term& m,
                                                                       const FixToggles& fx) {
  if (st.phase != UEPhase::AwaitKeyConf)
    throw Error(Errc::WrongPhase, "ue_check_keyconf outside AwaitKeyConf");
  if (m != keyconf_step(st.k_seaf, ConfDirection::SNtoUE)) {
    st.phase = UEPhase::Failed;
    return {std::move(st), false, std::nullopt};
  }
  st.phase = UEPhase::Done;
  std::optional<Term> reply;
  if (fx.ue_sends_conf()) reply = keyconf_step(st.k_seaf, ConfDirection::UEtoSN);
  return {std::move(st), true, reply};
}

enum class SNPhase { AwaitSuci, AwaitHNChallenge, AwaitUEResponse, AwaitHNConfirm, AwaitKeyConf, Done, Aborted };

struct SNSession {
  std::optional<Term> suci;
  std::optional<Term> hn;  // idHN taken from the SUCI
  std::optional<Term> r;
  std::optional<Term> autn;
  std::optional<Term> hxres;
  std::optional<Term> k_seaf;
  std::optional<Term> supi;
  SNPhase phase = SNPhase::AwaitSuci;
};

struct SNState {
  Term sn_name;
  std::map<int, SNSession> sessions;
};

inline SNSession& sn_session(SNState& st, int sid, SNPhase expected) {
  auto it = st.sessions.find(sid);
  if (it == st.sessions.end()) throw Error(Errc::UnknownSession, "SN session " + std::to_string(sid));
  if (it->second.phase != expected) throw Error(Errc::WrongPhase, "SN session " + std::to_string(sid));
  return it->second;
}

/// SUCI received over the radio; returns the request ⟨SUCI, SNname⟩ for the HN
/// named in the SUCI, or nothing if the message is not SUCI-shaped.
inline std::pair<SNState, std::optional<Term>> sn_receive_suci(SNState st, int sid, const Term& suci) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitSuci);
  if (!suci.is_pair() || !suci.kid(1).is_const()) return {std::move(st), std::nullopt};
  s.suci = suci;
  s.hn = suci.kid(1);
  s.phase = SNPhase::AwaitHNChallenge;
  Term req = pair(suci, st.sn_name);
  return {std::move(st), req};
}

/// Challenge tuple ⟨R, AUTN, HXRES*, K_SEAF⟩ from the HN; returns ⟨R, AUTN⟩ for the UE.
inline std::pair<SNState, std::optional<Term>> sn_receive_challenge(SNState st, int sid,
                                                                    const Term& challenge) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitHNChallenge);
  auto parts = untuple(challenge, 4);
  if (!parts) {
    s.phase = SNPhase::Aborted;
    return {std::move(st), std::nullopt};
  }
  s.r = (*parts)[0];
  s.autn = (*parts)[1];
  s.hxres = (*parts)[2];
  s.k_seaf = (*parts)[3];
  s.phase = SNPhase::AwaitUEResponse;
  Term out = pair(*s.r, *s.autn);
  return {std::move(st), out};
}

inline std::pair<SNState, bool> sn_check_response(SNState st, int sid, const Term& res_star) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitUEResponse);
  bool ok = aka::hres_star(*s.r, res_star) == *s.hxres;
  s.phase = ok ? SNPhase::AwaitHNConfirm : SNPhase::Aborted;
  return {std::move(st), ok};
}

enum class SNReplyKind { Response, Resync, Abort };

struct SNForward {
  SNReplyKind kind;
  std::optional<Term> to_hn;  // ⟨RES*, SUCI⟩ or ⟨Sync_Failure, AUTS⟩
};

/// Any UE answer: RES*, Mac_Failure or ⟨Sync_Failure, AUTS⟩.
inline std::pair<SNState, SNForward> sn_receive_ue_reply(SNState st, int sid, const Term& m) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitUEResponse);
  if (m == msg::mac_failure()) {
    s.phase = SNPhase::Aborted;
    return {std::move(st), SNForward{SNReplyKind::Abort, std::nullopt}};
  }
  if (m.is_pair() && m.kid(0) == msg::sync_failure()) {
    s.phase = SNPhase::Aborted;
    Term fwd = pair(msg::sync_failure(), m.kid(1));
    return {std::move(st), SNForward{SNReplyKind::Resync, fwd}};
  }
  Term suci = *s.suci;
  auto [st2, ok] = sn_check_response(std::move(st), sid, m);
  if (!ok) return {std::move(st2), SNForward{SNReplyKind::Abort, std::nullopt}};
  return {std::move(st2), SNForward{SNReplyKind::Response, pair(m, suci)}};
}

struct SNFinal {
  bool accepted = false;
  std::optional<Term> conf;  // SN→UE key confirmation, when enabled
};

/// Final HN message (SUPI, or ⟨SUPI, SUCI⟩ with the pairing fix).
inline std::pair<SNState, SNFinal> sn_receive_final(SNState st, int sid, const Term& m,
                                                    const FixToggles& fx) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitHNConfirm);
  Term supi = m;
  if (fx.supi_suci_pairing) {
    if (!m.is_pair() || m.kid(1) != *s.suci) {
      s.phase = SNPhase::Aborted;
      return {std::move(st), SNFinal{}};
    }
    supi = m.kid(0);
  }
  s.supi = supi;
  SNFinal out{true, std::nullopt};
  if (fx.key_confirmation) {
    out.conf = keyconf_step(s.k_seaf, ConfDirection::SNtoUE);
    s.phase = fx.ue_sends_conf() ? SNPhase::AwaitKeyConf : SNPhase::Done;
  } else {
    s.phase = SNPhase::Done;
  }
  return {std::move(st), out};
}

inline std::pair<SNState, bool> sn_check_keyconf(SNState st, int sid, const Term& m) {
  SNSession& s = sn_session(st, sid, SNPhase::AwaitKeyConf);
  bool ok = m == keyconf_step(s.k_seaf, ConfDirection::UEtoSN);
  s.phase = ok ? SNPhase::Done : SNPhase::Aborted;
  return {std::move(st), ok};
}

enum class HNPhase { AwaitRequest, AwaitResponse, Done, Resynced, Aborted };

struct HNSubscriber {
  Term k;
  Term sqn_hn;
};

struct HNSession {
  Term supi;
  Term suci;
  Term sn_name;
  Term r;
  Term sqn;
  Term xres_star;
  Term k_seaf;
  HNPhase phase = HNPhase::AwaitResponse;
};

struct HNState {
  Term id;
  Term sk;
  std::map<Term, HNSubscriber> subscribers;  // keyed by SUPI
  std::vector<HNSession> sessions;
};

struct ChallengeTuple {
  Term r, autn, hxres_star, k_seaf, xres_star, sqn;
  Term message() const { return tuple({r, autn, hxres_star, k_seaf}); }
};

inline std::pair<HNState, ChallengeTuple> hn_make_challenge(HNState st, const Term& supi,
                                                            const Term& sn_name, const Term& r,
                                                            const FixToggles& fx) {
  auto it = st.subscribers.find(supi);
  if (it == st.subscribers.end()) throw Error(Errc::UnknownSubscriber, render(supi));
  HNSubscriber& sub = it->second;
  const Term& k = sub.k;
  Term sqn = sub.sqn_hn;
  Term conc = aka::conc(k, sqn, r);
  Term xres = aka::res_star(k, r, sn_name);
  ChallengeTuple c{r,
                   aka::autn(k, sqn, r, sn_name, fx),
                   aka::hres_star(r, xres),
                   aka::k_seaf(k, r, conc, sn_name),
                   xres,
                   sqn};
  sub.sqn_hn = nat_increment(sqn, 1);
  return {std::move(st), std::move(c)};
}

/// SUPI concealed in a SUCI addressed to this HN, if it decrypts.
inline std::optional<Term> hn_open_suci(const HNState& st, const Term& suci) {
  if (!suci.is_pair() || suci.kid(1) != st.id) return std::nullopt;
  const Term& c = suci.kid(0);
  if (!c.is_apply(Sym::aenc) || c.kid(1) != pk(st.sk)) return std::nullopt;
  const Term& body = c.kid(0);
  if (!body.is_pair()) return std::nullopt;
  return body.kid(0);
}

/// Authentication request ⟨SUCI, ·⟩ arriving on the channel from `channel_sn`.
/// Opens a session and returns its index together with the challenge.
inline std::tuple<HNState, int, ChallengeTuple> hn_receive_request(HNState st, const Term& suci,
                                                                   const Term& channel_sn,
                                                                   const Term& r,
                                                                   const FixToggles& fx) {
  auto supi = hn_open_suci(st, suci);
  if (!supi || !st.subscribers.contains(*supi))
    throw Error(Errc::UnknownSubscriber, "undecryptable SUCI " + render(suci));
  auto [st2, c] = hn_make_challenge(std::move(st), *supi, channel_sn, r, fx);
  st2.sessions.push_back(HNSession{*supi, suci, channel_sn, c.r, c.sqn, c.xres_star, c.k_seaf,
                                   HNPhase::AwaitResponse});
  int hsid = static_cast<int>(st2.sessions.size()) - 1;
  return {std::move(st2), hsid, std::move(c)};
}

inline HNSession& hn_session(HNState& st, int hsid) {
  if (hsid < 0 || static_cast<std::size_t>(hsid) >= st.sessions.size())
    throw Error(Errc::UnknownSession, "HN session " + std::to_string(hsid));
  return st.sessions[static_cast<std::size_t>(hsid)];
}

inline std::pair<HNState, Term> hn_check_response(HNState st, int hsid, const Term& res_star,
                                                  const FixToggles& fx) {
  HNSession& s = hn_session(st, hsid);
  if (s.phase != HNPhase::AwaitResponse) throw Error(Errc::WrongPhase, "HN session not awaiting response");
  if (res_star != s.xres_star) {
    s.phase = HNPhase::Aborted;
    throw Error(Errc::Mismatch, "RES* does not match xRES*");
  }
  s.phase = HNPhase::Done;
  Term final_msg = fx.supi_suci_pairing ? pair(s.supi, s.suci) : s.supi;
  return {std::move(st), final_msg};
}

/// Re-synchronization from AUTS. The counter never moves backwards: a resync
/// that would lower it leaves it unchanged.
inline HNState hn_resync(HNState st, int hsid, const Term& auts) {
  HNSession& s = hn_session(st, hsid);
  if (!auts.is_pair()) return st;
  HNSubscriber& sub = st.subscribers.at(s.supi);
  Term sqn_ue = xor_of(auts.kid(0), f5star(sub.k, s.r));
  if (sqn_ue.kind() != Kind::Nat || sqn_ue.base() != sub.sqn_hn.base()) return st;
  if (f1star(sub.k, pair(sqn_ue, s.r)) != auts.kid(1)) return st;
  Term next = nat_increment(sqn_ue, 1);
  if (nat_less(sub.sqn_hn, next)) sub.sqn_hn = next;
  s.phase = HNPhase::Resynced;
  return st;
}

}  // namespace akalab
