#pragma once

// Execution traces and their JSON-lines encoding.
//
// One event per line: {"ev": ..., "actor": ..., "term": <rendering>, "n": <index>}
// plus event-specific keys. Action events carry the attacker/scheduler action
// text in "term".

#include <akalab/term.hpp>
#include <akalab/term_parse.hpp>

#include <json.hpp>

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace akalab {

enum class Role { UE, SN, HN };
enum class DataKind { None, KSeaf, Supi, SNname };
enum class SecretItem { K, KSeaf, Supi, SkHN, Sqn };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::UE: return "UE";
    case Role::SN: return "SN";
    case Role::HN: return "HN";
  }
  return "?";
}

inline std::optional<Role> role_from_name(std::string_view s) {
  if (s == "UE") return Role::UE;
  if (s == "SN") return Role::SN;
  if (s == "HN") return Role::HN;
  return std::nullopt;
}

inline std::string_view data_name(DataKind d) {
  switch (d) {
    case DataKind::None: return "none";
    case DataKind::KSeaf: return "kseaf";
    case DataKind::Supi: return "supi";
    case DataKind::SNname: return "snname";
  }
  return "?";
}

inline std::optional<DataKind> data_from_name(std::string_view s) {
  for (DataKind d : {DataKind::None, DataKind::KSeaf, DataKind::Supi, DataKind::SNname})
    if (data_name(d) == s) return d;
  return std::nullopt;
}

inline std::string_view secret_name(SecretItem i) {
  switch (i) {
    case SecretItem::K: return "k";
    case SecretItem::KSeaf: return "kseaf";
    case SecretItem::Supi: return "supi";
    case SecretItem::SkHN: return "skhn";
    case SecretItem::Sqn: return "sqn";
  }
  return "?";
}

inline std::optional<SecretItem> secret_from_name(std::string_view s) {
  for (SecretItem i : {SecretItem::K, SecretItem::KSeaf, SecretItem::Supi, SecretItem::SkHN,
                       SecretItem::Sqn})
    if (secret_name(i) == s) return i;
  return std::nullopt;
}

enum class EvKind { Act, Send, Deliver, Inject, Reveal, ClaimCommit, ClaimRunning, ClaimSecret, StateAssert };

inline std::string_view ev_name(EvKind k) {
  switch (k) {
    case EvKind::Act: return "act";
    case EvKind::Send: return "send";
    case EvKind::Deliver: return "deliver";
    case EvKind::Inject: return "inject";
    case EvKind::Reveal: return "reveal";
    case EvKind::ClaimCommit: return "commit";
    case EvKind::ClaimRunning: return "running";
    case EvKind::ClaimSecret: return "secret";
    case EvKind::StateAssert: return "assert";
  }
  return "?";
}

inline std::optional<EvKind> ev_from_name(std::string_view s) {
  for (EvKind k : {EvKind::Act, EvKind::Send, EvKind::Deliver, EvKind::Inject, EvKind::Reveal,
                   EvKind::ClaimCommit, EvKind::ClaimRunning, EvKind::ClaimSecret, EvKind::StateAssert})
    if (ev_name(k) == s) return k;
  return std::nullopt;
}

/// One trace event. Fields beyond ev/actor/term are used by specific kinds:
///   send/deliver/inject: channel, to
///   commit/running:      peer, roles (a,b), data
///   secret:              item, role (in a)
///   act/reveal/assert:   text
struct Event {
  EvKind ev = EvKind::Act;
  std::string actor;
  std::optional<Term> term;
  std::string text;
  std::string channel;
  std::string to;
  std::string peer;
  Role a = Role::UE;
  Role b = Role::UE;
  DataKind data = DataKind::None;
  SecretItem item = SecretItem::K;

  bool is_claim() const {
    return ev == EvKind::ClaimCommit || ev == EvKind::ClaimRunning || ev == EvKind::ClaimSecret;
  }
};

using Trace = std::vector<Event>;

inline nlohmann::ordered_json event_to_json(const Event& e, std::size_t n) {
  nlohmann::ordered_json j;
  j["ev"] = ev_name(e.ev);
  j["actor"] = e.actor;
  switch (e.ev) {
    case EvKind::Act:
    case EvKind::Reveal:
    case EvKind::StateAssert:
      j["term"] = e.text;
      break;
    default:
      j["term"] = e.term ? render(*e.term) : "";
  }
  j["n"] = n;
  switch (e.ev) {
    case EvKind::Send:
    case EvKind::Deliver:
    case EvKind::Inject:
      j["channel"] = e.channel;
      if (!e.to.empty()) j["to"] = e.to;
      break;
    case EvKind::ClaimCommit:
    case EvKind::ClaimRunning:
      j["peer"] = e.peer;
      j["roles"] = std::string(role_name(e.a)) + ":" + std::string(role_name(e.b));
      j["data"] = data_name(e.data);
      break;
    case EvKind::ClaimSecret:
      j["item"] = secret_name(e.item);
      j["role"] = role_name(e.a);
      break;
    default:
      break;
  }
  return j;
}

inline std::string event_line(const Event& e, std::size_t n) { return event_to_json(e, n).dump(); }

inline void write_trace(std::ostream& os, const Trace& t) {
  for (std::size_t i = 0; i < t.size(); ++i) os << event_line(t[i], i) << '\n';
}

inline std::string trace_to_string(const Trace& t) {
  std::ostringstream os;
  write_trace(os, t);
  return os.str();
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": missing string field '" + key + "'");
  return *it;
}

}  // namespace detail

inline Event event_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": not an object");
  Event e;
  auto kind = ev_from_name(detail::field(j, "ev", line).get<std::string>());
  if (!kind) throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": unknown event kind");
  e.ev = *kind;
  e.actor = detail::field(j, "actor", line).get<std::string>();
  std::string term = detail::field(j, "term", line).get<std::string>();
  auto n = j.find("n");
  if (n == j.end() || !n->is_number_unsigned() || n->get<std::size_t>() != line)
    throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": bad event index");
  switch (e.ev) {
    case EvKind::Act:
    case EvKind::Reveal:
    case EvKind::StateAssert:
      e.text = term;
      break;
    default:
      if (!term.empty()) {
        try {
          e.term = parse_term(term);
        } catch (const Error& err) {
          throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": " + err.what());
        }
      }
  }
  auto opt = [&](const char* key) -> std::string {
    auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
  };
  switch (e.ev) {
    case EvKind::Send:
    case EvKind::Deliver:
    case EvKind::Inject:
      e.channel = detail::field(j, "channel", line).get<std::string>();
      e.to = opt("to");
      break;
    case EvKind::ClaimCommit:
    case EvKind::ClaimRunning: {
      e.peer = detail::field(j, "peer", line).get<std::string>();
      std::string roles = detail::field(j, "roles", line).get<std::string>();
      auto colon = roles.find(':');
      auto a = role_from_name(roles.substr(0, colon));
      auto b = colon == std::string::npos ? std::nullopt : role_from_name(roles.substr(colon + 1));
      auto d = data_from_name(detail::field(j, "data", line).get<std::string>());
      if (!a || !b || !d) throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": bad claim fields");
      e.a = *a;
      e.b = *b;
      e.data = *d;
      break;
    }
    case EvKind::ClaimSecret: {
      auto i = secret_from_name(detail::field(j, "item", line).get<std::string>());
      auto r = role_from_name(detail::field(j, "role", line).get<std::string>());
      if (!i || !r) throw Error(Errc::TraceParse, "line " + std::to_string(line) + ": bad secret claim");
      e.item = *i;
      e.a = *r;
      break;
    }
    default:
      break;
  }
  return e;
}

inline Trace read_trace(std::istream& is) {
  Trace t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw Error(Errc::TraceParse, "line " + std::to_string(t.size()) + ": " + err.what());
    }
    t.push_back(event_from_json(j, t.size()));
  }
  if (!is.eof()) throw Error(Errc::TraceParse, "read error");
  return t;
}

inline Trace trace_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_trace(is);
}

}  // namespace akalab
