// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <akalab/cli.hpp>
#include <akalab/deduction.hpp>
#include <akalab/linkability.hpp>
#include <akalab/matrix.hpp>
#include <akalab/properties.hpp>
#include <akalab/scenario.hpp>

#include "support/brute_force.hpp"
#include "support/generators.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace akalab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const char* name, const std::function<Outcome()>& body) {
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %-34s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", n, name, seconds_since(t0), o.detail.c_str());
  std::fflush(stdout);
}

const std::string kData = AKALAB_DATA_DIR;

ScenarioConfig binding_scenario() { return load_config(kData + "/binding-attack.cfg").config; }

std::vector<Term> kseaf_secrets(const Trace& t) {
  std::vector<Term> out;
  for (const Event& e : t)
    if (e.ev == EvKind::ClaimSecret && e.item == SecretItem::KSeaf) out.push_back(*e.term);
  return out;
}

// An SN commit toward subscriber P whose K_SEAF the HN generated for another subscriber.
bool wrong_supi_association(const Trace& t, std::string& what) {
  for (const Event& c : t) {
    if (c.ev != EvKind::ClaimCommit || c.a != Role::SN || c.b != Role::UE || c.data != DataKind::KSeaf) continue;
    for (const Event& r : t)
      if (r.ev == EvKind::ClaimRunning && r.actor.starts_with("hn_") && r.a == Role::UE && r.data == DataKind::KSeaf &&
          r.term == c.term && r.peer != c.peer) {
        what = c.actor + " committed to " + c.peer + " with the key generated for " + r.peer;
        return true;
      }
  }
  return false;
}

std::size_t c2_assertion_failures = 0;
std::size_t c2_states = 0;

}  // namespace

int main() {
  auto start = Clock::now();

  criterion(1, "executability", [] {
    ScenarioConfig c;
    c.fixes.key_confirmation = true;
    auto t0 = Clock::now();
    Trace t = run_honest(c);
    double s = seconds_since(t0);
    std::set<std::string> holders;
    auto keys = kseaf_secrets(t);
    bool equal = !keys.empty();
    for (const Event& e : t)
      if (e.ev == EvKind::ClaimSecret && e.item == SecretItem::KSeaf) {
        holders.insert(e.actor.substr(0, 2));
        equal = equal && *e.term == keys.front();
      }
    bool ok = equal && holders.size() == 3 && s < 1.0;
    return Outcome{ok, "UE, SN, HN hold " + std::string(equal ? "equal" : "different") + " K_SEAF, " +
                           std::to_string(static_cast<long>(s * 1000)) + " ms"};
  });

  criterion(2, "binding attack reproduction", [] {
    ScenarioConfig c = binding_scenario();
    auto t0 = Clock::now();
    Verdict ni = explore(c, parse_property("niagree:SN:UE:kseaf"));
    Verdict weak = explore(c, parse_property("weak:UE:SN"));
    double s = seconds_since(t0);
    c2_assertion_failures = ni.stats.assertion_failures + weak.stats.assertion_failures;
    c2_states = ni.stats.states + weak.stats.states;
    std::string what = "no wrong-SUPI association in trace";
    bool assoc = ni.attack && wrong_supi_association(ni.trace, what);
    bool ok = ni.attack && weak.attack && assoc && s < 60;
    std::ostringstream d;
    d << "NI(SN,UE,K_SEAF) " << (ni.attack ? "attack" : "none") << ", weak(UE,SN) " << (weak.attack ? "attack" : "none")
      << "; " << what;
    return Outcome{ok, d.str()};
  });

  criterion(3, "binding fix regression", [] {
    std::ostringstream d;
    bool ok = true;
    for (int variant = 0; variant < 2; ++variant) {
      ScenarioConfig c = binding_scenario();
      if (variant == 0) c.channel_binding = true;
      else c.fixes.supi_suci_pairing = true;
      auto t0 = Clock::now();
      bool any = false;
      for (const char* p : {"niagree:SN:UE:kseaf", "weak:UE:SN"}) any = any || explore(c, parse_property(p)).attack;
      double s = seconds_since(t0);
      ok = ok && !any && s < 60;
      d << (variant == 0 ? "binding" : "supi-suci") << ": " << (any ? "attack" : "none") << " (" << static_cast<long>(s)
        << "s)  ";
    }
    return Outcome{ok, d.str()};
  });

  criterion(4, "SNname-in-MAC fix", [] {
    ScenarioConfig c;
    c.n_sns = 2;
    c.fixes.key_confirmation = false;
    PropertyId p = parse_property("weak:UE:SN");
    bool without = explore(c, p).attack;
    c.fixes.mac_binds_snname = true;
    bool with = explore(c, p).attack;
    return Outcome{without && !with, std::string("no k-c: ") + (without ? "attack" : "none") +
                                         " without fix, " + (with ? "attack" : "none") + " with mac-snname"};
  });

  // Shared by criteria 5 and 11 so each distinct search runs once.
  auto cache = std::make_shared<SearchCache>();
  std::map<std::string, std::pair<Preset, MatrixResult>> full;
  double matrix_seconds = 0;
  std::string matrix_error;
  try {
    for (const char* name : {"table1", "table2", "table3"}) {
      Preset p = load_preset(name);
      MatrixOptions o;
      o.cache = cache;
      MatrixResult r = run_matrix(p, o);
      matrix_seconds += r.wall_ms / 1000.0;
      full.emplace(name, std::make_pair(std::move(p), std::move(r)));
    }
  } catch (const std::exception& e) {
    matrix_error = e.what();
  }

  criterion(5, "unidirectional key confirmation", [&] {
    if (!matrix_error.empty()) return Outcome{false, matrix_error};
    std::size_t cells = 0, differ = 0;
    std::string first;
    for (auto& [name, pr] : full) {
      MatrixOptions o;
      o.cache = cache;
      o.uni_keyconf = true;
      MatrixResult uni = run_matrix(pr.first, o);
      for (std::size_t i = 0; i < uni.cells.size(); ++i, ++cells)
        if (uni.cells[i].rendered != pr.second.cells[i].rendered) {
          ++differ;
          if (first.empty()) first = name + ": " + cell_label(pr.first.cells[i]) + " " + uni.cells[i].rendered;
        }
    }
    return Outcome{differ == 0, std::to_string(cells) + " cells, " + std::to_string(differ) + " verdicts differ" +
                                    (first.empty() ? "" : " (" + first + ")")};
  });

  criterion(6, "traceability distinguisher", [] {
    DistinguisherResult d = run_linkability_distinguisher(ScenarioConfig{});
    bool stable = true;
    for (int i = 0; i < 3; ++i) {
      DistinguisherResult again = run_linkability_distinguisher(ScenarioConfig{});
      stable = stable && again.same == d.same && again.diff == d.diff &&
               trace_to_string(again.same_trace) == trace_to_string(d.same_trace);
    }
    bool ok = d.distinguished && stable && d.same == msg::sync_failure() && d.diff == msg::mac_failure();
    return Outcome{ok, "same subscriber -> " + render(d.same) + ", other -> " + render(d.diff) +
                           (stable ? ", deterministic" : ", NOT deterministic")};
  });

  criterion(7, "secrecy matrix", [] {
    std::ostringstream d;
    // SUPI: active attacker with K and SQN revealed.
    ScenarioConfig s;
    s.channel_binding = false;
    s.n_sessions = 2;
    s.reveals = {{RevealKind::K, -1}, {RevealKind::SqnBase, -1}};
    PropertyId supi = parse_property("secrecy:supi");
    bool supi_clean = explore(s, supi).attack;
    s.reveals.push_back({RevealKind::SkHN, -1});
    bool supi_skhn = explore(s, supi).attack;
    bool ok = !supi_clean && supi_skhn;
    d << "SUPI " << (supi_clean ? "leaks" : "secret") << " / " << (supi_skhn ? "leaks" : "secret") << " with skHN; ";

    // K_SEAF over every combination of the five compromises.
    const RevealKind kinds[] = {RevealKind::K, RevealKind::SkHN, RevealKind::Supi, RevealKind::SqnBase,
                                RevealKind::CompromiseSN};
    int wrong = 0;
    for (unsigned mask = 0; mask < 32; ++mask) {
      ScenarioConfig c;
      c.channel_binding = false;
      for (unsigned i = 0; i < 5; ++i)
        if (mask & (1u << i)) c.reveals.push_back({kinds[i], -1});
      bool expect = (mask & 1u) || (mask & 16u);
      if (explore(c, parse_property("secrecy:kseaf")).attack != expect) ++wrong;
    }
    ok = ok && wrong == 0;
    d << "K_SEAF matches K-or-ch on " << 32 - wrong << "/32 reveal sets; ";

    Verdict pfs = explore(ScenarioConfig{}, parse_property("pfs:kseaf"));
    bool late = false;
    for (const Event& e : pfs.trace) late = late || (e.ev == EvKind::Reveal && e.text.starts_with("late:"));
    ok = ok && pfs.attack && late;
    d << "PFS " << (pfs.attack && late ? "broken by late K reveal" : "not broken");
    return Outcome{ok, d.str()};
  });

  criterion(8, "deduction oracle equivalence", [] {
    test_support::TermGen gen(2024);
    gen.atoms = {Term::constant("c0"), Term::fresh(0, "n"), Term::fresh(1, "n"), Term::fresh(2, "n"),
                 Term::constant("c1")};
    int checked = 0, disagree = 0, positive = 0;
    while (checked < 600) {
      std::vector<Term> know;
      std::size_t n = 1 + gen.pick(3);
      for (std::size_t j = 0; j < n; ++j) know.push_back(normalize(gen.raw(3)));
      Term goal = normalize(gen.raw(3));
      if (test_support::universe_atom_count(know, goal) > 5) continue;
      ++checked;
      KnowledgeBase kb(3);
      for (const Term& t : know) kb.observe(t);
      bool oracle = test_support::brute_force_derivable(know, goal);
      positive += oracle;
      if (kb.derivable(goal) != oracle) ++disagree;
    }
    return Outcome{disagree == 0 && checked >= 500, std::to_string(checked) + " instances (" + std::to_string(positive) +
                                                        " derivable), " + std::to_string(disagree) + " disagreements"};
  });

  criterion(9, "term algebra laws", [] {
    test_support::TermGen gen(99);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      Term x = gen.raw(6), y = gen.raw(3), z = gen.raw(3);
      Term nx = normalize(x);
      if (normalize(nx) != nx) ++bad;
      if (!equal_mod_theory(Term::raw_xor({x, x}), Term::zero())) ++bad;
      if (!equal_mod_theory(Term::raw_xor({x, y}), Term::raw_xor({y, x}))) ++bad;
      if (!equal_mod_theory(Term::raw_xor({Term::raw_xor({x, y}), z}), Term::raw_xor({x, Term::raw_xor({y, z})}))) ++bad;
      if (!equal_mod_theory(Term::raw_xor({x, Term::zero()}), x)) ++bad;
    }
    return Outcome{bad == 0, "10000 terms, " + std::to_string(bad) + " law violations"};
  });

  criterion(10, "SQN invariants", [] {
    bool ok = c2_states > 0 && c2_assertion_failures == 0;
    return Outcome{ok, std::to_string(c2_assertion_failures) + " assertion failures over " + std::to_string(c2_states) +
                           " states of criterion 2's searches"};
  });

  criterion(11, "matrix regression", [&] {
    if (!matrix_error.empty()) return Outcome{false, matrix_error};
    std::size_t cells = 0, mismatches = 0;
    std::string list;
    for (auto& [name, pr] : full) {
      cells += pr.second.cells.size();
      for (std::size_t i = 0; i < pr.second.cells.size(); ++i)
        if (!pr.second.cells[i].match) {
          ++mismatches;
          list += "; " + name + " " + cell_label(pr.first.cells[i]) + ": " + pr.second.cells[i].rendered +
                  " vs expected " + pr.first.cells[i].expect;
        }
    }
    bool ok = mismatches == 0 && matrix_seconds < 15 * 60;
    return Outcome{ok, std::to_string(cells) + " cells, " + std::to_string(mismatches) + " mismatches, " +
                           std::to_string(static_cast<long>(matrix_seconds)) + "s" + list};
  });

  std::printf("%d of 11 criteria failed, %.0fs total\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
