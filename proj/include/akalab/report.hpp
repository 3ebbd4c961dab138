#pragma once

// Run reports (machine JSON plus a human table) and the message-sequence
// rendering of traces.

#include <akalab/config.hpp>
#include <akalab/matrix.hpp>
#include <akalab/scenario.hpp>

#include <json.hpp>

#include <ctime>
#include <sstream>
#include <string>
#include <vector>

namespace akalab {

inline constexpr const char* kToolVersion = "0.1.0";

struct VerdictRecord {
  PropertyId prop;
  bool attack = false;
  bool expect_attack = false;
  ExploreStats stats;

  bool matched() const { return attack == expect_attack; }
};

struct RunReport {
  std::string config_digest;
  std::vector<VerdictRecord> verdicts;
  std::string timestamp;
  std::string tool_version = kToolVersion;
};

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string outcome_name(const PropertyId& p, bool attack) {
  if (p.kind == PropKind::Linkability) return attack ? "Distinguished" : "NotDistinguished";
  return attack ? "AttackFound" : "NoAttackWithinBound";
}

inline nlohmann::ordered_json report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["config_digest"] = r.config_digest;
  auto vs = nlohmann::ordered_json::array();
  for (const VerdictRecord& v : r.verdicts)
    vs.push_back({{"prop", to_string(v.prop)},
                  {"outcome", outcome_name(v.prop, v.attack)},
                  {"expected", outcome_name(v.prop, v.expect_attack)},
                  {"stats",
                   {{"states", v.stats.states},
                    {"injections_tried", v.stats.injections_tried},
                    {"assertion_failures", v.stats.assertion_failures},
                    {"wall_ms", v.stats.wall_ms}}}});
  j["verdicts"] = vs;
  j["timestamp"] = r.timestamp;
  j["tool_version"] = r.tool_version;
  return j;
}

inline std::string render_report(const RunReport& r) {
  std::ostringstream os;
  os << "config " << r.config_digest << "\n";
  for (const VerdictRecord& v : r.verdicts) {
    std::string prop = to_string(v.prop);
    os << prop << std::string(prop.size() < 24 ? 24 - prop.size() : 1, ' ') << outcome_name(v.prop, v.attack);
    if (!v.matched()) os << "   (expected " << outcome_name(v.prop, v.expect_attack) << ")";
    os << "   states=" << v.stats.states << " ms=" << static_cast<long long>(v.stats.wall_ms) << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json matrix_to_json(const Preset& p, const MatrixResult& r) {
  nlohmann::ordered_json j;
  j["preset"] = p.name;
  j["channel_binding"] = p.channel_binding;
  auto cells = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const Cell& c = p.cells[i];
    nlohmann::ordered_json cj;
    cj["cell"] = cell_label(c);
    cj["computed"] = r.cells[i].rendered;
    cj["expected"] = c.expect;
    cj["paper"] = c.paper;
    cj["match"] = r.cells[i].match;
    auto runs = nlohmann::ordered_json::array();
    for (const MatrixRun& m : r.cells[i].runs)
      runs.push_back({{"shape", m.shape}, {"held", m.held}, {"attack", m.attack}, {"states", m.stats.states},
                      {"wall_ms", m.stats.wall_ms}});
    cj["runs"] = runs;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  j["mismatches"] = r.mismatches();
  j["wall_ms"] = r.wall_ms;
  j["tool_version"] = kToolVersion;
  return j;
}

// --- message-sequence rendering ---------------------------------------------

namespace detail {

// Column of an agent label: 0 UE, 1 SN, 2 HN, 3 attacker.
inline int msc_column(const std::string& who) {
  if (who.starts_with("ue")) return 0;
  if (who.starts_with("sn_")) return 1;
  if (who.starts_with("hn_")) return 2;
  return 3;
}

}  // namespace detail

/// One row per event in execution order, with a marker in the column of the
/// role acting (deliveries sit with the receiver) and the payload after.
inline std::string render_msc(const Trace& t) {
  constexpr int kWidth = 14;
  static const char* heads[] = {"UE", "SN", "HN", "attacker"};
  std::ostringstream os;
  os << "   n  ";
  for (const char* h : heads) os << h << std::string(kWidth - std::string(h).size(), ' ');
  os << "\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Event& e = t[i];
    int col = detail::msc_column(e.actor);
    std::string mark, detail;
    switch (e.ev) {
      case EvKind::Send:
        mark = e.actor + " >";
        detail = e.channel + "  " + (e.term ? render(*e.term) : "");
        break;
      case EvKind::Deliver:
      case EvKind::Inject:
        col = e.ev == EvKind::Inject ? 3 : detail::msc_column(e.to);
        mark = "> " + e.to;
        detail = (e.ev == EvKind::Inject ? "injected on " : "") + e.channel + "  " + (e.term ? render(*e.term) : "");
        break;
      case EvKind::ClaimCommit:
      case EvKind::ClaimRunning:
        mark = e.actor + (e.ev == EvKind::ClaimCommit ? " commit" : " running");
        detail = std::string(role_name(e.a)) + ":" + std::string(role_name(e.b)) + " peer=" + e.peer + " " +
                 std::string(data_name(e.data)) + "=" + (e.term ? render(*e.term) : "");
        break;
      case EvKind::ClaimSecret:
        mark = e.actor + " secret";
        detail = std::string(secret_name(e.item)) + "=" + (e.term ? render(*e.term) : "");
        break;
      case EvKind::Act:
        col = 3;
        mark = e.actor == "attacker" ? "attacker" : "sched";
        detail = e.text;
        break;
      case EvKind::Reveal:
        col = 3;
        mark = "reveal";
        detail = e.text;
        break;
      case EvKind::StateAssert:
        mark = e.actor + " ASSERT";
        detail = e.text;
        break;
    }
    std::string n = std::to_string(i);
    os << std::string(n.size() < 4 ? 4 - n.size() : 0, ' ') << n << "  ";
    for (int c = 0; c < 4; ++c) {
      std::string cell = c == col ? mark : "|";
      if (cell.size() < kWidth) cell.append(kWidth - cell.size(), ' ');
      else cell += ' ';
      os << cell;
    }
    os << detail << "\n";
  }
  return os.str();
}

}  // namespace akalab
