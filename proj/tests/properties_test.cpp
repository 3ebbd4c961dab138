#include <akalab/properties.hpp>
#include <akalab/scenario.hpp>

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace akalab;

namespace {

const Term k1 = Term::fresh(1, "ks");
const Term k2 = Term::fresh(2, "ks");

Event claim(EvKind ev, std::string actor, std::string peer, Role a, Role b, DataKind d, Term t) {
  Event e;
  e.ev = ev;
  e.actor = std::move(actor);
  e.peer = std::move(peer);
  e.a = a;
  e.b = b;
  e.data = d;
  e.term = std::move(t);
  return e;
}

Event running(std::string actor, std::string peer, Role a, Role b, Term t, DataKind d = DataKind::KSeaf) {
  return claim(EvKind::ClaimRunning, std::move(actor), std::move(peer), a, b, d, std::move(t));
}

Event commit(std::string actor, std::string peer, Role a, Role b, Term t, DataKind d = DataKind::KSeaf) {
  return claim(EvKind::ClaimCommit, std::move(actor), std::move(peer), a, b, d, std::move(t));
}

Event reveal(std::string text) {
  Event e;
  e.ev = EvKind::Reveal;
  e.actor = "attacker";
  e.text = std::move(text);
  return e;
}

Action act(const std::string& s) { return parse_action(s); }

}  // namespace

TEST(PropertyId, RoundTrip) {
  for (const char* s : {"secrecy:k", "secrecy:kseaf:UE", "pfs:kseaf:SN", "alive:UE:SN", "weak:SN:UE",
                        "niagree:SN:UE:kseaf", "inj:UE:HN:kseaf", "niagree:HN:UE:snname", "linkability",
                        "invariant:sqn"})
    EXPECT_EQ(to_string(parse_property(s)), s);
}

TEST(PropertyId, Rejects) {
  for (const char* s : {"", "secrecy", "secrecy:foo", "weak:UE:UE", "niagree:SN:UE", "niagree:SN:UE:none",
                        "inj:XX:UE:kseaf", "linkability:x"})
    EXPECT_THROW(parse_property(s), Error) << s;
}

TEST(Secrecy, HonestTrace) {
  ScenarioConfig c;
  World w = scripted_world(c, {});
  for (SecretItem i : {SecretItem::K, SecretItem::KSeaf, SecretItem::Supi, SecretItem::SkHN, SecretItem::Sqn})
    EXPECT_TRUE(check_secrecy(w.trace, w.kb, i)) << secret_name(i);
}

TEST(Secrecy, RevealSkHNExposesSupi) {
  ScenarioConfig c;
  c.reveals = {{RevealKind::SkHN, 0}};
  World w = scripted_world(c, {act("start ue0 sn_0")});
  EXPECT_FALSE(check_secrecy(w.trace, w.kb, SecretItem::Supi));
}

TEST(Secrecy, PostSessionKeyRevealBreaksForwardSecrecy) {
  ScenarioConfig c;
  World w = scripted_world(c, {act("start ue0 sn_0"), act("auto"), act("reveal-k ue0")}, true);
  EXPECT_FALSE(holds(parse_property("pfs:kseaf"), w.trace, w.kb));
  // Before the reveal the session key was secret.
  World before = scripted_world(c, {act("start ue0 sn_0"), act("auto")}, true);
  EXPECT_TRUE(check_secrecy(before.trace, before.kb, SecretItem::KSeaf));
}

TEST(Aliveness, HonestTraceAllPairs) {
  ScenarioConfig c;
  Trace t = run_honest(c);
  for (Role a : {Role::UE, Role::SN, Role::HN})
    for (Role b : {Role::UE, Role::SN, Role::HN})
      if (a != b) EXPECT_TRUE(check_aliveness(t, a, b));
}

TEST(Aliveness, CommitWithoutRunning) {
  Trace t = {commit("ue0", "sn_0", Role::UE, Role::SN, k1)};
  EXPECT_FALSE(check_aliveness(t, Role::UE, Role::SN));
  t.insert(t.begin(), running("sn_0", "ue0", Role::UE, Role::SN, k2));
  EXPECT_TRUE(check_aliveness(t, Role::UE, Role::SN));
}

TEST(Honesty, CommitsNamingCompromisedPeersAreSkipped) {
  Trace t = {reveal("CompromiseSN:sn_0"), commit("ue0", "sn_0", Role::UE, Role::SN, k1)};
  EXPECT_FALSE(check_aliveness(t, Role::UE, Role::SN));
  EXPECT_TRUE(check_aliveness(t, Role::UE, Role::SN, Honesty::HonestOnly));
  EXPECT_TRUE(check_ni_agreement(t, Role::UE, Role::SN, DataKind::KSeaf, Honesty::HonestOnly));
  // A commit toward an honest peer is still checked.
  t.push_back(commit("ue0", "sn_1", Role::UE, Role::SN, k1));
  EXPECT_FALSE(check_aliveness(t, Role::UE, Role::SN, Honesty::HonestOnly));
}

TEST(Honesty, SecretsOfCompromisedAgentsAreSkipped) {
  ScenarioConfig c;
  c.reveals = {{RevealKind::K, 0}};
  World w = scripted_world(c, {});
  EXPECT_FALSE(check_secrecy(w.trace, w.kb, SecretItem::K));
  EXPECT_FALSE(check_secrecy(w.trace, w.kb, SecretItem::K, static_cast<std::size_t>(-1), Role::UE,
                             Honesty::Unconditional));
  EXPECT_TRUE(check_secrecy(w.trace, w.kb, SecretItem::K, static_cast<std::size_t>(-1), Role::UE,
                            Honesty::HonestOnly));
}

TEST(Agreement, HonestTraces) {
  ScenarioConfig c;
  c.n_sessions = 2;
  Trace t = run_honest(c);
  for (auto [a, b] : {std::pair{Role::UE, Role::SN}, {Role::SN, Role::UE}, {Role::UE, Role::HN}, {Role::HN, Role::UE}}) {
    EXPECT_TRUE(check_ni_agreement(t, a, b, DataKind::KSeaf));
    EXPECT_TRUE(check_inj_agreement(t, a, b, DataKind::KSeaf));
    EXPECT_TRUE(check_weak_agreement(t, a, b));
  }
}

TEST(Agreement, DataMismatchBreaksNIButNotWeak) {
  Trace t = {running("sn_0", "ue0", Role::SN, Role::UE, k2), commit("ue0", "sn_0", Role::SN, Role::UE, k1)};
  EXPECT_FALSE(check_ni_agreement(t, Role::SN, Role::UE, DataKind::KSeaf));
  EXPECT_TRUE(check_weak_agreement(t, Role::SN, Role::UE));
}

TEST(Agreement, ReplayedCommitBreaksInjectivityOnly) {
  Trace t = {running("sn_0", "ue0", Role::UE, Role::SN, k1), commit("ue0", "sn_0", Role::UE, Role::SN, k1),
             commit("ue0", "sn_0", Role::UE, Role::SN, k1)};
  EXPECT_TRUE(check_ni_agreement(t, Role::UE, Role::SN, DataKind::KSeaf));
  EXPECT_FALSE(check_inj_agreement(t, Role::UE, Role::SN, DataKind::KSeaf));
  t.push_back(running("sn_0", "ue0", Role::UE, Role::SN, k1));
  EXPECT_TRUE(check_inj_agreement(t, Role::UE, Role::SN, DataKind::KSeaf));
}

TEST(Agreement, EachRunningServesOneCommit) {
  Trace t = {running("sn_0", "ue0", Role::UE, Role::SN, k1), running("sn_0", "ue0", Role::UE, Role::SN, k1),
             commit("ue0", "sn_0", Role::UE, Role::SN, k1), commit("ue0", "sn_0", Role::UE, Role::SN, k1)};
  EXPECT_TRUE(check_inj_agreement(t, Role::UE, Role::SN, DataKind::KSeaf));
}

TEST(Agreement, BindingAttackTrace) {
  ScenarioConfig c;
  c.n_subscribers = 2;
  c.n_sessions = 2;
  c.channel_binding = false;
  Verdict v = explore(c, parse_property("niagree:SN:UE:kseaf"));
  ASSERT_TRUE(v.attack);
  EXPECT_FALSE(check_ni_agreement(v.trace, Role::SN, Role::UE, DataKind::KSeaf));
  // The SN's SUPI still matches the peer it names; only the key is off.
  EXPECT_TRUE(check_ni_agreement(v.trace, Role::SN, Role::UE, DataKind::Supi));
}

namespace {

// Random traces in the shape the engine emits: every claim site produces one
// event per data kind, all naming the same actor, peer and roles.
Trace random_claim_trace(std::mt19937_64& rng) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::vector<std::string> agents = {"ue0", "ue1", "sn_0", "hn_0"};
  const std::vector<Term> keys = {k1, k2, Term::fresh(3, "ks")};
  const Role roles[] = {Role::UE, Role::SN, Role::HN};
  Trace t;
  std::size_t n = 1 + pick(8);
  for (std::size_t i = 0; i < n; ++i) {
    EvKind ev = pick(2) ? EvKind::ClaimCommit : EvKind::ClaimRunning;
    std::string actor = agents[pick(agents.size())];
    std::string peer = agents[pick(agents.size())];
    Role a = roles[pick(2)];
    Role b = a == Role::UE ? roles[1 + pick(2)] : Role::UE;
    if (pick(2)) std::swap(a, b);
    Term ks = keys[pick(keys.size())];
    Term supi = Term::constant(agents[pick(2)]);
    t.push_back(claim(ev, actor, peer, a, b, DataKind::KSeaf, ks));
    t.push_back(claim(ev, actor, peer, a, b, DataKind::Supi, supi));
  }
  return t;
}

}  // namespace

TEST(Invariants, LoweHierarchyOnRandomTraces) {
  std::mt19937_64 rng(7);
  int nontrivial = 0;
  for (int i = 0; i < 5000; ++i) {
    Trace t = random_claim_trace(rng);
    for (Role a : {Role::UE, Role::SN, Role::HN})
      for (Role b : {Role::UE, Role::SN, Role::HN}) {
        if (a == b) continue;
        for (DataKind d : {DataKind::KSeaf, DataKind::Supi}) {
          bool inj = check_inj_agreement(t, a, b, d);
          bool ni = check_ni_agreement(t, a, b, d);
          bool weak = check_weak_agreement(t, a, b);
          bool alive = check_aliveness(t, a, b);
          if (inj) EXPECT_TRUE(ni);
          if (ni) EXPECT_TRUE(weak);
          if (weak) EXPECT_TRUE(alive);
          nontrivial += alive && !inj;
        }
      }
  }
  // The generator must actually separate the levels.
  EXPECT_GT(nontrivial, 100);
}

TEST(Invariants, SecrecyAntitoneInKnowledge) {
  test_support::TermGen gen(11);
  int flips_seen = 0;
  for (int i = 0; i < 400; ++i) {
    Trace t;
    Event s;
    s.ev = EvKind::ClaimSecret;
    s.actor = "ue0";
    s.item = SecretItem::KSeaf;
    s.term = normalize(gen.raw(2));
    t.push_back(s);
    KnowledgeBase kb;
    bool prev = check_secrecy(t, kb, SecretItem::KSeaf);
    for (int j = 0; j < 5; ++j) {
      kb.observe(normalize(gen.raw(2)));
      bool now = check_secrecy(t, kb, SecretItem::KSeaf);
      if (!prev) EXPECT_FALSE(now);
      flips_seen += prev && !now;
      prev = now;
    }
  }
  EXPECT_GT(flips_seen, 0);
}

TEST(Invariants, HonestTraceSatisfiesAchievableProperties) {
  ScenarioConfig c;
  World w = scripted_world(c, {});
  for (const char* p : {"secrecy:k", "secrecy:kseaf", "secrecy:supi", "secrecy:skhn", "alive:UE:SN", "alive:SN:UE",
                        "alive:UE:HN", "alive:HN:UE", "alive:SN:HN", "alive:HN:SN", "weak:UE:SN", "weak:SN:UE",
                        "weak:UE:HN", "weak:HN:UE", "weak:SN:HN", "weak:HN:SN", "niagree:UE:SN:kseaf",
                        "niagree:SN:UE:kseaf", "niagree:UE:HN:kseaf", "niagree:HN:UE:kseaf", "niagree:SN:HN:kseaf",
                        "niagree:HN:SN:kseaf", "niagree:UE:SN:supi", "niagree:SN:UE:supi", "niagree:SN:HN:supi",
                        "niagree:UE:HN:snname", "niagree:HN:UE:snname", "inj:UE:HN:kseaf", "inj:HN:UE:kseaf",
                        "invariant:sqn"})
    EXPECT_TRUE(holds(parse_property(p), w.trace, w.kb)) << p;
}
