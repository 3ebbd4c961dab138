#include <akalab/deduction.hpp>

#include "support/brute_force.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace akalab;
using test_support::brute_force_derivable;

namespace {

const Term a = Term::fresh(10, "a");
const Term b = Term::fresh(11, "b");
const Term m = Term::fresh(12, "m");
const Term sk = Term::fresh(13, "sk");
const Term key = Term::fresh(14, "k");
const Term nonce_r = Term::fresh(15, "r");
const Term sqn = Term::nat({"ue0"}, 3);

KnowledgeBase kb_of(std::initializer_list<Term> ts, std::size_t depth = kDefaultDepthBound) {
  KnowledgeBase kb(depth);
  for (const Term& t : ts) kb.observe(t);
  return kb;
}

}  // namespace

TEST(Observe, PairProjection) {
  EXPECT_TRUE(derivable(observe(KnowledgeBase{}, pair(a, b)), a));
}

TEST(Observe, NoDecryptionWithoutKey) {
  EXPECT_FALSE(derivable(kb_of({aenc(m, pk(sk))}), m));
}

TEST(Observe, DecryptionWithKey) {
  EXPECT_TRUE(derivable(kb_of({sk, aenc(m, pk(sk))}), m));
  // Order of observation does not matter.
  EXPECT_TRUE(derivable(kb_of({aenc(m, pk(sk)), sk}), m));
}

TEST(Saturate, XorCancellation) {
  auto kb = saturate(kb_of({xor_of(a, b), b}));
  EXPECT_TRUE(kb.saturate().contains(a));
  EXPECT_TRUE(derivable(kb, a));
}

TEST(Saturate, ConcealedSqnStaysSecretWithoutKey) {
  Term conc = xor_of(sqn, f5(key, nonce_r));
  for (std::size_t depth = 1; depth <= 6; ++depth)
    EXPECT_FALSE(derivable(kb_of({conc, nonce_r}, depth), sqn)) << "depth " << depth;
}

TEST(Saturate, ConcealedSqnRevealedByAnonymityKey) {
  Term conc = xor_of(sqn, f5(key, nonce_r));
  std::vector<Term> know{conc, f5(key, nonce_r)};
  ASSERT_TRUE(brute_force_derivable(know, sqn));  // oracle, frozen below
  EXPECT_TRUE(derivable(kb_of({conc, f5(key, nonce_r)}, 2), sqn));
}

TEST(Saturate, AnonymityKeyFromLongTermKey) {
  Term conc = xor_of(sqn, f5(key, nonce_r));
  EXPECT_TRUE(derivable(kb_of({conc, nonce_r, key}), sqn));
}

TEST(Derivable, Construction) {
  EXPECT_TRUE(derivable(kb_of({a, b}), pair(a, b)));
  EXPECT_TRUE(derivable(kb_of({a, b}), kdf(a, sha256(b))));
}

TEST(Derivable, PublicConstants) {
  EXPECT_TRUE(derivable(KnowledgeBase{}, Term::zero()));
  EXPECT_TRUE(derivable(KnowledgeBase{}, Term::constant("Mac_Failure")));
  EXPECT_FALSE(derivable(KnowledgeBase{}, a));
}

TEST(Derivable, DepthBoundLimitsConstruction) {
  Term deep = sha256(sha256(sha256(a)));
  EXPECT_TRUE(derivable(kb_of({a}, 3), deep));
  EXPECT_FALSE(derivable(kb_of({a}, 2), deep));
}

TEST(Derivable, NatThroughRevealedBase) {
  KnowledgeBase kb;
  EXPECT_FALSE(kb.derivable(sqn));
  kb.reveal_base({"ue0"});
  EXPECT_TRUE(kb.derivable(sqn));
  EXPECT_FALSE(kb.derivable(Term::nat({"ue1"}, 0)));
}

TEST(Derivable, NatIncrementsOfKnownCounter) {
  auto kb = kb_of({Term::nat({"ue0"}, 3)});
  EXPECT_TRUE(kb.derivable(Term::nat({"ue0"}, 5)));
  EXPECT_FALSE(kb.derivable(Term::nat({"ue0"}, 2)));
}

TEST(Invariants, Monotonicity) {
  test_support::TermGen gen(23);
  for (int i = 0; i < 200; ++i) {
    KnowledgeBase kb(3);
    for (int j = 0; j < 3; ++j) kb.observe(normalize(gen.raw(3)));
    Term goal = normalize(gen.raw(3));
    bool before = kb.derivable(goal);
    kb.observe(normalize(gen.raw(3)));
    if (before) EXPECT_TRUE(kb.derivable(goal)) << render(goal);
  }
}

TEST(Invariants, ConcealmentSoundAtAnyBound) {
  Term conc = xor_of(sqn, f5(key, nonce_r));
  for (std::size_t depth = 1; depth <= 8; ++depth) {
    KnowledgeBase kb(depth);
    kb.observe(conc);
    kb.observe(nonce_r);
    for (const char* c : {"zero", "Mac_Failure", "Sync_Failure", "UE_CONF", "SN_CONF"})
      kb.observe(Term::constant(c));
    EXPECT_FALSE(kb.derivable(sqn));
    EXPECT_FALSE(kb.derivable(key));
  }
}

// Randomized agreement with the naive oracle (smaller sample than acceptance).
TEST(Oracle, AgreesOnRandomInstances) {
  test_support::TermGen gen(29);
  gen.atoms = {Term::constant("c0"), Term::fresh(0, "n"), Term::fresh(1, "n"), Term::fresh(2, "n"),
               Term::constant("c1")};
  int disagreements = 0;
  int checked = 0;
  while (checked < 150) {
    std::vector<Term> know;
    std::size_t n = 1 + gen.pick(3);
    for (std::size_t j = 0; j < n; ++j) know.push_back(normalize(gen.raw(3)));
    Term goal = normalize(gen.raw(3));
    if (test_support::universe_atom_count(know, goal) > 8) continue;
    ++checked;
    KnowledgeBase kb(3);
    for (const Term& t : know) kb.observe(t);
    if (kb.derivable(goal) != brute_force_derivable(know, goal)) ++disagreements;
  }
  EXPECT_EQ(disagreements, 0);
}
