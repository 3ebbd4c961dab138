#pragma once

// Scenario configuration and its JSON encoding ("schema": 1).

#include <akalab/error.hpp>
#include <akalab/properties.hpp>
#include <akalab/protocol.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace akalab {

enum class RevealKind { K, SkHN, Supi, SqnBase, CompromiseSN };

inline std::string_view reveal_name(RevealKind k) {
  switch (k) {
    case RevealKind::K: return "RevealK";
    case RevealKind::SkHN: return "RevealSkHN";
    case RevealKind::Supi: return "RevealSUPI";
    case RevealKind::SqnBase: return "RevealSQNBase";
    case RevealKind::CompromiseSN: return "CompromiseSN";
  }
  return "?";
}

inline std::optional<RevealKind> reveal_from_name(std::string_view s) {
  for (RevealKind k : {RevealKind::K, RevealKind::SkHN, RevealKind::Supi, RevealKind::SqnBase,
                       RevealKind::CompromiseSN})
    if (reveal_name(k) == s) return k;
  return std::nullopt;
}

/// A static compromise. `target` indexes subscribers, HNs or SNs depending on
/// the kind; -1 applies it to every agent of that kind.
struct Reveal {
  RevealKind kind;
  int target = -1;
  auto operator<=>(const Reveal&) const = default;
};

struct Bounds {
  std::size_t max_steps = 60;
  std::size_t max_injections = 3;
  std::size_t deduction_depth = kDefaultDepthBound;
  auto operator<=>(const Bounds&) const = default;
};

struct ScenarioConfig {
  int n_subscribers = 1;
  int n_sns = 1;
  int n_hns = 1;
  int n_sessions = 1;
  std::vector<Reveal> reveals;
  bool channel_binding = true;
  FixToggles fixes;
  Bounds bounds;
  std::uint64_t seed = 0;

  bool reveals_any(RevealKind k, int target) const {
    for (const Reveal& r : reveals)
      if (r.kind == k && (r.target == -1 || r.target == target)) return true;
    return false;
  }
};

inline void validate(const ScenarioConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::ConfigInvalid, what);
  };
  need(c.n_subscribers >= 1, "n_subscribers must be >= 1");
  need(c.n_sns >= 1, "n_sns must be >= 1");
  need(c.n_hns >= 1, "n_hns must be >= 1");
  need(c.n_sessions >= 1, "n_sessions must be >= 1");
  need(c.bounds.max_steps >= 1, "bounds.max_steps must be >= 1");
  need(c.bounds.deduction_depth >= 1, "bounds.deduction_depth must be >= 1");
  need(!c.fixes.unidirectional_keyconf || c.fixes.key_confirmation,
       "fixes.unidirectional_keyconf requires key_confirmation");
  for (const Reveal& r : c.reveals) {
    int limit = r.kind == RevealKind::SkHN ? c.n_hns : r.kind == RevealKind::CompromiseSN ? c.n_sns : c.n_subscribers;
    need(r.target >= -1 && r.target < limit, "reveal target out of range for " + std::string(reveal_name(r.kind)));
  }
}

/// Expected outcome of one property in a config file.
struct Expectation {
  PropertyId prop;
  bool attack = false;
};

struct ConfigFile {
  ScenarioConfig config;
  std::vector<Expectation> expectations;
};

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const char* key, const char* path, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ConfigParse, std::string("field '") + path + "' has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["n_subscribers"] = c.n_subscribers;
  j["n_sns"] = c.n_sns;
  j["n_hns"] = c.n_hns;
  j["n_sessions"] = c.n_sessions;
  auto reveals = nlohmann::ordered_json::array();
  for (const Reveal& r : c.reveals)
    reveals.push_back({{"kind", reveal_name(r.kind)}, {"target", r.target}});
  j["reveals"] = reveals;
  j["channel_binding"] = c.channel_binding;
  j["fixes"] = {{"supi_suci_pairing", c.fixes.supi_suci_pairing},
                {"mac_binds_snname", c.fixes.mac_binds_snname},
                {"unidirectional_keyconf", c.fixes.unidirectional_keyconf},
                {"key_confirmation", c.fixes.key_confirmation}};
  j["bounds"] = {{"max_steps", c.bounds.max_steps},
                 {"max_injections", c.bounds.max_injections},
                 {"deduction_depth", c.bounds.deduction_depth}};
  j["seed"] = c.seed;
  return j;
}

inline ConfigFile config_from_json(const nlohmann::json& j) {
  using detail::get_field;
  if (!j.is_object()) throw Error(Errc::ConfigParse, "top level must be an object");
  auto schema = j.find("schema");
  if (schema == j.end()) throw Error(Errc::ConfigParse, "field 'schema' is missing");
  if (!schema->is_number_integer() || schema->get<int>() != 1)
    throw Error(Errc::ConfigParse, "field 'schema' must be 1");
  static const std::set<std::string> known = {"schema", "n_subscribers", "n_sns", "n_hns", "n_sessions",
                                              "reveals", "channel_binding", "fixes", "bounds", "seed",
                                              "properties", "comment"};
  for (const auto& [k, _] : j.items())
    if (!known.contains(k)) throw Error(Errc::ConfigParse, "field '" + k + "' is not recognized");

  ConfigFile out;
  ScenarioConfig& c = out.config;
  c.n_subscribers = get_field(j, "n_subscribers", "n_subscribers", c.n_subscribers);
  c.n_sns = get_field(j, "n_sns", "n_sns", c.n_sns);
  c.n_hns = get_field(j, "n_hns", "n_hns", c.n_hns);
  c.n_sessions = get_field(j, "n_sessions", "n_sessions", c.n_sessions);
  c.channel_binding = get_field(j, "channel_binding", "channel_binding", c.channel_binding);
  c.seed = get_field<std::uint64_t>(j, "seed", "seed", c.seed);
  if (auto it = j.find("reveals"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::ConfigParse, "field 'reveals' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& r = (*it)[i];
      std::string path = "reveals[" + std::to_string(i) + "]";
      if (!r.is_object()) throw Error(Errc::ConfigParse, "field '" + path + "' must be an object");
      auto kind = reveal_from_name(get_field<std::string>(r, "kind", (path + ".kind").c_str(), ""));
      if (!kind) throw Error(Errc::ConfigParse, "field '" + path + ".kind' is not a known reveal");
      c.reveals.push_back(Reveal{*kind, get_field(r, "target", (path + ".target").c_str(), -1)});
    }
  }
  if (auto it = j.find("fixes"); it != j.end()) {
    if (!it->is_object()) throw Error(Errc::ConfigParse, "field 'fixes' must be an object");
    FixToggles& f = c.fixes;
    f.supi_suci_pairing = get_field(*it, "supi_suci_pairing", "fixes.supi_suci_pairing", f.supi_suci_pairing);
    f.mac_binds_snname = get_field(*it, "mac_binds_snname", "fixes.mac_binds_snname", f.mac_binds_snname);
    f.unidirectional_keyconf =
        get_field(*it, "unidirectional_keyconf", "fixes.unidirectional_keyconf", f.unidirectional_keyconf);
    f.key_confirmation = get_field(*it, "key_confirmation", "fixes.key_confirmation", f.key_confirmation);
  }
  if (auto it = j.find("bounds"); it != j.end()) {
    if (!it->is_object()) throw Error(Errc::ConfigParse, "field 'bounds' must be an object");
    Bounds& b = c.bounds;
    b.max_steps = get_field(*it, "max_steps", "bounds.max_steps", b.max_steps);
    b.max_injections = get_field(*it, "max_injections", "bounds.max_injections", b.max_injections);
    b.deduction_depth = get_field(*it, "deduction_depth", "bounds.deduction_depth", b.deduction_depth);
  }
  if (auto it = j.find("properties"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::ConfigParse, "field 'properties' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& p = (*it)[i];
      std::string path = "properties[" + std::to_string(i) + "]";
      Expectation e;
      try {
        e.prop = parse_property(get_field<std::string>(p, "prop", (path + ".prop").c_str(), ""));
      } catch (const Error&) {
        throw Error(Errc::ConfigParse, "field '" + path + ".prop' is not a valid property");
      }
      std::string expect = get_field<std::string>(p, "expect", (path + ".expect").c_str(), "ok");
      if (expect != "ok" && expect != "attack")
        throw Error(Errc::ConfigParse, "field '" + path + ".expect' must be \"ok\" or \"attack\"");
      e.attack = expect == "attack";
      out.expectations.push_back(e);
    }
  }
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(Errc::ConfigParse, e.what());
  }
  return out;
}

inline ConfigFile parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigParse, e.what());
  }
  return config_from_json(j);
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IOFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// FNV-1a over the canonical JSON dump; stable across runs.
inline std::string config_digest(const ScenarioConfig& c) {
  std::string canon = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace akalab
