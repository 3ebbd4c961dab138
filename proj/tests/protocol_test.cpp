#include <akalab/deduction.hpp>
#include <akalab/protocol.hpp>

#include <gtest/gtest.h>

using namespace akalab;

namespace {

const Term k = Term::fresh(1, "k");
const Term sk = Term::fresh(2, "skhn");
const Term imsi = Term::fresh(3, "imsi");
const Term r = Term::fresh(4, "r");
const Term r2 = Term::fresh(5, "r");
const Term rs = Term::fresh(6, "rs");
const Term rs2 = Term::fresh(7, "rs");
const Term hn_id = Term::constant("hn_0");
const Term sn_name = Term::constant("sn_0");
const Term supi = pair(imsi, hn_id);
const Term sqn0 = Term::nat({"ue0"}, 0);

UEState ue() {
  UEState st;
  st.record = SubscriberRecord{supi, k, sqn0, hn_id};
  st.pk_hn = pk(sk);
  st.sn_name = sn_name;
  return st;
}

HNState hn() {
  HNState st;
  st.id = hn_id;
  st.sk = sk;
  st.subscribers[supi] = HNSubscriber{k, nat_increment(sqn0, 1)};
  return st;
}

SNState sn() {
  SNState st;
  st.sn_name = sn_name;
  st.sessions[0] = SNSession{};
  return st;
}

// Expected formulas written out directly from the message table.
Term expected_conc(const Term& sqn, const Term& rr) { return xor_of(sqn, f5(k, rr)); }
Term expected_mac(const Term& sqn, const Term& rr) { return f1(k, pair(sqn, rr)); }
Term expected_res(const Term& rr) { return kdf(pair(f3(k, rr), f4(k, rr)), pair(sn_name, pair(rr, f2(k, rr)))); }
Term expected_kseaf(const Term& sqn, const Term& rr) {
  return kdf(kdf(pair(f3(k, rr), f4(k, rr)), pair(sn_name, expected_conc(sqn, rr))), sn_name);
}

FixToggles no_fix() { return FixToggles{}; }

}  // namespace

TEST(UEMakeSuci, Shape) {
  auto [st, suci] = ue_make_suci(ue(), rs);
  EXPECT_EQ(suci, pair(aenc(pair(supi, rs), pk(sk)), hn_id));
  EXPECT_EQ(st.phase, UEPhase::AwaitChallenge);
  EXPECT_EQ(st.session_suci_nonce, rs);
}

TEST(UEMakeSuci, DistinctNoncesGiveDistinctSucis) {
  EXPECT_NE(ue_make_suci(ue(), rs).second, ue_make_suci(ue(), rs2).second);
}

TEST(UEMakeSuci, SupiStaysConcealed) {
  KnowledgeBase kb;
  kb.observe(ue_make_suci(ue(), rs).second);
  kb.observe(pk(sk));
  EXPECT_FALSE(kb.derivable(supi));
  EXPECT_FALSE(kb.derivable(imsi));
}

TEST(UEMakeSuci, WrongPhase) {
  auto st = ue_make_suci(ue(), rs).first;
  EXPECT_THROW(ue_make_suci(st, rs2), Error);
}

TEST(HNMakeChallenge, Expansion) {
  Term sqn1 = nat_increment(sqn0, 1);
  auto [st, c] = hn_make_challenge(hn(), supi, sn_name, r, no_fix());
  EXPECT_EQ(c.autn, pair(expected_conc(sqn1, r), expected_mac(sqn1, r)));
  EXPECT_EQ(c.xres_star, expected_res(r));
  EXPECT_EQ(c.hxres_star, sha256(pair(r, expected_res(r))));
  EXPECT_EQ(c.k_seaf, expected_kseaf(sqn1, r));
  EXPECT_EQ(st.subscribers.at(supi).sqn_hn, nat_increment(sqn0, 2));
  EXPECT_EQ(c.message(), pair(r, pair(c.autn, pair(c.hxres_star, c.k_seaf))));
}

TEST(HNMakeChallenge, MacBindsSnname) {
  FixToggles fx;
  fx.mac_binds_snname = true;
  Term sqn1 = nat_increment(sqn0, 1);
  auto c = hn_make_challenge(hn(), supi, sn_name, r, fx).second;
  EXPECT_EQ(c.autn.kid(1), f1(k, pair(sqn1, pair(r, sn_name))));
}

TEST(HNMakeChallenge, UnknownSubscriber) {
  EXPECT_THROW(hn_make_challenge(hn(), pair(Term::fresh(99, "imsi"), hn_id), sn_name, r, no_fix()), Error);
}

TEST(UECheckChallenge, FreshChallengeAccepted) {
  auto c = hn_make_challenge(hn(), supi, sn_name, r, no_fix()).second;
  auto st = ue_make_suci(ue(), rs).first;
  auto [st2, reply] = ue_check_challenge(st, r, c.autn, no_fix());
  EXPECT_EQ(reply.verdict, UEVerdict::Accept);
  EXPECT_EQ(reply.message, expected_res(r));
  EXPECT_EQ(st2.record.sqn, nat_increment(sqn0, 1));
  EXPECT_EQ(st2.k_seaf, c.k_seaf);
  EXPECT_EQ(st2.phase, UEPhase::AwaitKeyConf);
}

TEST(UECheckChallenge, CorruptedMac) {
  auto c = hn_make_challenge(hn(), supi, sn_name, r, no_fix()).second;
  Term bad = pair(c.autn.kid(0), f1(k, pair(sqn0, r)));
  auto [st, reply] = ue_check_challenge(ue_make_suci(ue(), rs).first, r, bad, no_fix());
  EXPECT_EQ(reply.verdict, UEVerdict::MacFailure);
  EXPECT_EQ(reply.message, Term::constant("Mac_Failure"));
  EXPECT_EQ(st.phase, UEPhase::Failed);
}

TEST(UECheckChallenge, ReplayGivesSyncFailureWithAuts) {
  auto c = hn_make_challenge(hn(), supi, sn_name, r, no_fix()).second;
  auto st = ue_check_challenge(ue_make_suci(ue(), rs).first, r, c.autn, no_fix()).first;
  st.phase = UEPhase::Idle;
  st = ue_make_suci(st, rs2).first;
  auto [st2, reply] = ue_check_challenge(st, r, c.autn, no_fix());
  Term sqn1 = nat_increment(sqn0, 1);
  EXPECT_EQ(reply.verdict, UEVerdict::SyncFailure);
  EXPECT_EQ(reply.message,
            pair(Term::constant("Sync_Failure"), pair(xor_of(sqn1, f5star(k, r)), f1star(k, pair(sqn1, r)))));
  EXPECT_EQ(st2.record.sqn, sqn1);
}

TEST(UECheckChallenge, SnnameMismatchUnderFixIsMacFailure) {
  FixToggles fx;
  fx.mac_binds_snname = true;
  auto c = hn_make_challenge(hn(), supi, Term::constant("sn_1"), r, fx).second;
  auto reply = ue_check_challenge(ue_make_suci(ue(), rs).first, r, c.autn, fx).second;
  EXPECT_EQ(reply.verdict, UEVerdict::MacFailure);
}

TEST(UECheckChallenge, WrongPhase) { EXPECT_THROW(ue_check_challenge(ue(), r, r, no_fix()), Error); }

TEST(SNCheckResponse, HonestAndForeign) {
  auto c = hn_make_challenge(hn(), supi, sn_name, r, no_fix()).second;
  auto st = sn_receive_suci(sn(), 0, ue_make_suci(ue(), rs).second).first;
  st = sn_receive_challenge(st, 0, c.message()).first;
  EXPECT_TRUE(sn_check_response(st, 0, expected_res(r)).second);

  auto [bad, ok] = sn_check_response(st, 0, Term::constant("junk"));
  EXPECT_FALSE(ok);
  EXPECT_EQ(bad.sessions.at(0).phase, SNPhase::Aborted);

  // RES* of another session of the same subscriber.
  EXPECT_FALSE(sn_check_response(st, 0, expected_res(r2)).second);
}

TEST(SNCheckResponse, Errors) {
  EXPECT_THROW(sn_check_response(sn(), 7, r), Error);
  EXPECT_THROW(sn_check_response(sn(), 0, r), Error);
}

TEST(HNCheckResponse, FinalMessage) {
  Term suci = ue_make_suci(ue(), rs).second;
  auto [st, hsid, c] = hn_receive_request(hn(), suci, sn_name, r, no_fix());
  EXPECT_EQ(hn_check_response(st, hsid, c.xres_star, no_fix()).second, supi);
  FixToggles fx;
  fx.supi_suci_pairing = true;
  EXPECT_EQ(hn_check_response(st, hsid, c.xres_star, fx).second, pair(supi, suci));
}

TEST(HNCheckResponse, WrongResponse) {
  auto [st, hsid, c] = hn_receive_request(hn(), ue_make_suci(ue(), rs).second, sn_name, r, no_fix());
  try {
    hn_check_response(st, hsid, expected_res(r2), no_fix());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Mismatch);
  }
  EXPECT_THROW(hn_check_response(st, 5, c.xres_star, no_fix()), Error);
}

TEST(HNResync, ValidAutsSetsCounter) {
  auto [st, hsid, c] = hn_receive_request(hn(), ue_make_suci(ue(), rs).second, sn_name, r, no_fix());
  Term sqn_ue = Term::nat({"ue0"}, 7);
  Term auts = pair(xor_of(sqn_ue, f5star(k, r)), f1star(k, pair(sqn_ue, r)));
  HNState out = hn_resync(st, hsid, auts);
  EXPECT_EQ(out.subscribers.at(supi).sqn_hn, Term::nat({"ue0"}, 8));
  EXPECT_EQ(out.sessions[static_cast<std::size_t>(hsid)].phase, HNPhase::Resynced);
}

TEST(HNResync, BadMacOrForeignNonceLeavesState) {
  auto [st, hsid, c] = hn_receive_request(hn(), ue_make_suci(ue(), rs).second, sn_name, r, no_fix());
  Term sqn_ue = Term::nat({"ue0"}, 7);
  Term before = st.subscribers.at(supi).sqn_hn;
  Term bad_mac = pair(xor_of(sqn_ue, f5star(k, r)), f1star(k, pair(sqn_ue, r2)));
  EXPECT_EQ(hn_resync(st, hsid, bad_mac).subscribers.at(supi).sqn_hn, before);
  Term other_r = pair(xor_of(sqn_ue, f5star(k, r2)), f1star(k, pair(sqn_ue, r2)));
  EXPECT_EQ(hn_resync(st, hsid, other_r).subscribers.at(supi).sqn_hn, before);
  EXPECT_THROW(hn_resync(st, 9, bad_mac), Error);
}

TEST(HNResync, NeverLowersCounter) {
  HNState h = hn();
  h.subscribers.at(supi).sqn_hn = Term::nat({"ue0"}, 20);
  auto [st, hsid, c] = hn_receive_request(h, ue_make_suci(ue(), rs).second, sn_name, r, no_fix());
  Term sqn_ue = Term::nat({"ue0"}, 3);
  Term auts = pair(xor_of(sqn_ue, f5star(k, r)), f1star(k, pair(sqn_ue, r)));
  EXPECT_EQ(hn_resync(st, hsid, auts).subscribers.at(supi).sqn_hn, Term::nat({"ue0"}, 21));
}

TEST(KeyConf, Messages) {
  Term ks = expected_kseaf(sqn0, r);
  EXPECT_EQ(keyconf_step(ks, ConfDirection::UEtoSN), kdf(ks, Term::constant("UE_CONF")));
  EXPECT_EQ(keyconf_step(ks, ConfDirection::SNtoUE), kdf(ks, Term::constant("SN_CONF")));
  EXPECT_THROW(keyconf_step(std::nullopt, ConfDirection::UEtoSN), Error);
}

namespace {

struct Flow {
  UEState ue;
  SNState sn;
  HNState hn;
  std::vector<Term> radio;  // every message the UE and SN exchanged over the air
};

// One complete honest run through the pure role functions.
Flow honest_flow(const FixToggles& fx) {
  Flow f{ue(), sn(), hn(), {}};
  auto [u1, suci] = ue_make_suci(f.ue, rs);
  f.radio.push_back(suci);
  auto [s1, req] = sn_receive_suci(f.sn, 0, suci);
  auto [h1, hsid, c] = hn_receive_request(f.hn, req->kid(0), sn_name, r, fx);
  auto [s2, to_ue] = sn_receive_challenge(s1, 0, c.message());
  f.radio.push_back(*to_ue);
  auto [u2, reply] = ue_check_challenge(u1, to_ue->kid(0), to_ue->kid(1), fx);
  f.radio.push_back(reply.message);
  auto [s3, fwd] = sn_receive_ue_reply(s2, 0, reply.message);
  auto [h2, fin] = hn_check_response(h1, hsid, fwd.to_hn->kid(0), fx);
  auto [s4, sf] = sn_receive_final(s3, 0, fin, fx);
  f.ue = u2;
  f.sn = s4;
  f.hn = h2;
  if (sf.conf) {
    f.radio.push_back(*sf.conf);
    auto [u3, ok, back] = ue_check_keyconf(f.ue, *sf.conf, fx);
    EXPECT_TRUE(ok);
    f.ue = u3;
    if (back) {
      f.radio.push_back(*back);
      auto [s5, ok2] = sn_check_keyconf(f.sn, 0, *back);
      EXPECT_TRUE(ok2);
      f.sn = s5;
    }
  }
  return f;
}

}  // namespace

TEST(HonestFlow, AllPartiesAgreeOnKseaf) {
  Flow f = honest_flow(no_fix());
  ASSERT_TRUE(f.ue.k_seaf);
  EXPECT_EQ(*f.ue.k_seaf, *f.sn.sessions.at(0).k_seaf);
  EXPECT_EQ(*f.ue.k_seaf, f.hn.sessions[0].k_seaf);
  EXPECT_EQ(f.ue.phase, UEPhase::Done);
  EXPECT_EQ(f.sn.sessions.at(0).phase, SNPhase::Done);
  EXPECT_EQ(f.hn.sessions[0].phase, HNPhase::Done);
  EXPECT_EQ(f.sn.sessions.at(0).supi, supi);
}

TEST(HonestFlow, UnidirectionalKeyConfSendsOneMessage) {
  FixToggles fx;
  fx.unidirectional_keyconf = true;
  EXPECT_EQ(honest_flow(fx).radio.size(), 4u);
  EXPECT_EQ(honest_flow(no_fix()).radio.size(), 5u);
}

TEST(HonestFlow, MismatchedKeysFailConfirmation) {
  Flow f = honest_flow(no_fix());
  UEState st = f.ue;
  st.phase = UEPhase::AwaitKeyConf;
  Term wrong = kdf(expected_kseaf(sqn0, r2), Term::constant("SN_CONF"));
  EXPECT_FALSE(std::get<1>(ue_check_keyconf(st, wrong, no_fix())));
}

TEST(HonestFlow, Deterministic) {
  Flow a = honest_flow(no_fix());
  Flow b = honest_flow(no_fix());
  EXPECT_EQ(a.radio, b.radio);
}

TEST(Dichotomy, ValidMacStaleSqnIsAlwaysSyncFailure) {
  // For every stale counter the HN could have used, a correctly MACed
  // challenge yields Sync_Failure and never Mac_Failure.
  for (std::uint64_t ue_at = 1; ue_at < 6; ++ue_at)
    for (std::uint64_t hn_at = 0; hn_at <= ue_at; ++hn_at) {
      UEState st = ue();
      st.record.sqn = Term::nat({"ue0"}, ue_at);
      st = ue_make_suci(st, rs).first;
      Term sqn = Term::nat({"ue0"}, hn_at);
      Term autn = pair(xor_of(sqn, f5(k, r)), f1(k, pair(sqn, r)));
      EXPECT_EQ(ue_check_challenge(st, r, autn, no_fix()).second.verdict, UEVerdict::SyncFailure)
          << ue_at << " " << hn_at;
    }
}
