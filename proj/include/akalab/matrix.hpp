#pragma once

// Scenario matrices mirroring the minimal-assumption tables. Each cell is
// recomputed from scratch: the scenario with the cell's assumptions must show
// no attack within bounds, and each assumption is reported only if dropping
// it lets the search find one.

#include <akalab/config.hpp>
#include <akalab/error.hpp>
#include <akalab/scenario.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef AKALAB_DATA_DIR
#define AKALAB_DATA_DIR "data"
#endif

namespace akalab {

enum class Assume { NotK, NotSqn, NotSupi, NotSkHN, KeyConf, NotCh };

inline constexpr Assume kAllAssumptions[] = {Assume::NotK,    Assume::NotSqn,  Assume::NotSupi,
                                             Assume::NotSkHN, Assume::KeyConf, Assume::NotCh};

inline std::string_view assume_name(Assume a) {
  switch (a) {
    case Assume::NotK: return "¬K";
    case Assume::NotSqn: return "¬SQN";
    case Assume::NotSupi: return "¬SUPI";
    case Assume::NotSkHN: return "¬skHN";
    case Assume::KeyConf: return "k-c";
    case Assume::NotCh: return "¬ch";
  }
  return "?";
}

/// Parses "¬K ∧ k-c" style conjunctions; "∅" is the empty set. A trailing
/// "*" (Table 2's "no dishonest SN at all") reads as the plain assumption.
inline std::set<Assume> parse_assumptions(std::string_view text) {
  std::set<Assume> out;
  std::string s(text);
  std::string_view conj = "∧";
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(conj, pos);
    std::string part = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    part.erase(0, part.find_first_not_of(' '));
    part.erase(part.find_last_not_of(' ') + 1);
    if (!part.empty() && part.back() == '*') part.pop_back();
    if (!part.empty() && part != "∅") {
      bool found = false;
      for (Assume a : kAllAssumptions)
        if (assume_name(a) == part) {
          out.insert(a);
          found = true;
        }
      if (!found) throw Error(Errc::InvalidArgument, "unknown assumption '" + part + "'");
    }
    if (next == std::string::npos) break;
    pos = next + conj.size();
  }
  return out;
}

inline std::string render_assumptions(const std::set<Assume>& as) {
  if (as.empty()) return "∅";
  std::string out;
  for (Assume a : kAllAssumptions)
    if (as.contains(a)) out += (out.empty() ? "" : " ∧ ") + std::string(assume_name(a));
  return out;
}

enum class CellKind { Min, Lightning, NA, WA };

struct Cell {
  std::string row;
  std::string col;  // "NI", "I", or "" for rows without the split
  Role pov = Role::UE;
  std::optional<Role> partner;  // absent for secrecy rows
  std::string prop;
  std::string paper;  // the table's entry, as printed
  std::string expect;
  CellKind kind = CellKind::Min;
  std::set<Assume> assumptions;
  std::set<Assume> implicit;  // held in every run, never reported
  std::vector<std::string> shapes;
};

struct Preset {
  std::string name;
  bool channel_binding = false;
  std::map<std::string, Bounds> shape_bounds;
  std::vector<Cell> cells;
};

/// Topology of a scenario shape; bounds come from the preset file.
inline ScenarioConfig shape_config(const std::string& shape) {
  ScenarioConfig c;
  if (shape == "one") return c;
  if (shape == "two-sn") {
    c.n_sns = 2;
    return c;
  }
  if (shape == "replay") {
    c.n_sessions = 2;
    return c;
  }
  if (shape == "two-ue") {
    c.n_subscribers = 2;
    c.n_sessions = 2;
    return c;
  }
  throw Error(Errc::InvalidArgument, "unknown shape '" + shape + "'");
}

struct CellResult;

/// Finished and in-flight searches, keyed by config and property. Can be
/// shared between matrix runs.
struct SearchCache {
  std::mutex mu;
  std::map<std::string, std::shared_future<Verdict>> entries;
};

/// Options applied on top of every generated config.
struct MatrixOptions {
  bool uni_keyconf = false;  // use unidirectional key confirmation wherever k-c holds
  unsigned jobs = 0;         // 0: hardware concurrency
  std::function<void(std::size_t, const CellResult&)> on_cell;  // called as each cell finishes
  std::shared_ptr<SearchCache> cache;                            // fresh per run when null
};

/// The worst case with `held` assumptions removed from it.
inline ScenarioConfig assumption_config(ScenarioConfig c, const std::set<Assume>& held, const MatrixOptions& opt) {
  c.reveals.clear();
  if (!held.contains(Assume::NotK)) c.reveals.push_back({RevealKind::K, -1});
  if (!held.contains(Assume::NotSqn)) c.reveals.push_back({RevealKind::SqnBase, -1});
  if (!held.contains(Assume::NotSupi)) c.reveals.push_back({RevealKind::Supi, -1});
  if (!held.contains(Assume::NotSkHN)) c.reveals.push_back({RevealKind::SkHN, -1});
  if (!held.contains(Assume::NotCh)) c.reveals.push_back({RevealKind::CompromiseSN, -1});
  c.fixes.key_confirmation = held.contains(Assume::KeyConf);
  c.fixes.unidirectional_keyconf = c.fixes.key_confirmation && opt.uni_keyconf;
  return c;
}

namespace detail {

inline Role cell_role(const nlohmann::json& j, const char* key, std::size_t i) {
  auto r = role_from_name(j.value(key, std::string()));
  if (!r) throw Error(Errc::ConfigParse, "cells[" + std::to_string(i) + "]." + key + " is not a role");
  return *r;
}

}  // namespace detail

inline Preset parse_preset(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigParse, e.what());
  }
  Preset p;
  try {
    p.name = j.at("preset").get<std::string>();
    p.channel_binding = j.at("channel_binding").get<bool>();
    for (const auto& [shape, b] : j.at("shapes").items()) {
      shape_config(shape);
      Bounds bounds;
      bounds.max_steps = b.value("max_steps", bounds.max_steps);
      bounds.max_injections = b.value("max_injections", bounds.max_injections);
      bounds.deduction_depth = b.value("deduction_depth", bounds.deduction_depth);
      p.shape_bounds[shape] = bounds;
    }
    std::map<std::pair<Role, Role>, const nlohmann::json*> weak;
    const auto& cells = j.at("cells");
    for (const auto& c : cells)
      if (c.value("row", "") == "weak")
        weak[{detail::cell_role(c, "pov", 0), detail::cell_role(c, "partner", 0)}] = &c;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      Cell cell;
      cell.row = c.at("row").get<std::string>();
      cell.col = c.value("col", "");
      cell.pov = detail::cell_role(c, "pov", i);
      if (c.contains("partner")) cell.partner = detail::cell_role(c, "partner", i);
      cell.paper = c.at("paper").get<std::string>();
      cell.expect = c.at("expect").get<std::string>();
      cell.prop = c.value("prop", "");
      std::string kind = c.at("kind").get<std::string>();
      // "wa" cells borrow the weak-agreement cell's assumptions and shapes.
      const nlohmann::json* src = &c;
      if (kind == "wa") {
        auto it = cell.partner ? weak.find({cell.pov, *cell.partner}) : weak.end();
        if (it == weak.end()) throw Error(Errc::ConfigParse, "cells[" + std::to_string(i) + "]: no weak row to follow");
        src = it->second;
        cell.kind = CellKind::WA;
      } else if (kind == "min") {
        cell.kind = CellKind::Min;
      } else if (kind == "lightning") {
        cell.kind = CellKind::Lightning;
      } else if (kind == "na") {
        cell.kind = CellKind::NA;
      } else {
        throw Error(Errc::ConfigParse, "cells[" + std::to_string(i) + "].kind is not recognized");
      }
      if (cell.kind == CellKind::WA && src->at("kind").get<std::string>() == "lightning") cell.kind = CellKind::Lightning;
      if (src->contains("assumptions")) cell.assumptions = parse_assumptions(src->at("assumptions").get<std::string>());
      for (const auto& a : src->value("implicit", std::vector<std::string>{}))
        for (Assume x : parse_assumptions(a)) cell.implicit.insert(x);
      cell.shapes = src->value("shapes", std::vector<std::string>{});
      if (cell.kind != CellKind::NA) {
        parse_property(cell.prop);
        if (cell.shapes.empty()) throw Error(Errc::ConfigParse, "cells[" + std::to_string(i) + "] has no shapes");
        for (const auto& s : cell.shapes)
          if (!p.shape_bounds.contains(s))
            throw Error(Errc::ConfigParse, "cells[" + std::to_string(i) + "] uses undeclared shape '" + s + "'");
      }
      p.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigParse, std::string("preset: ") + e.what());
  }
  return p;
}

inline Preset load_preset(const std::string& name_or_path) {
  std::string path = name_or_path;
  if (path.find('/') == std::string::npos && !path.ends_with(".json"))
    path = std::string(AKALAB_DATA_DIR) + "/" + name_or_path + ".json";
  std::ifstream in(path);
  if (!in) throw Error(Errc::IOFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_preset(ss.str());
}

struct MatrixRun {
  std::string shape;
  std::string held;  // rendered assumption set
  bool attack = false;
  ExploreStats stats;
};

struct CellResult {
  std::string rendered;
  bool match = false;
  std::vector<MatrixRun> runs;
};

struct MatrixResult {
  std::string preset;
  std::vector<CellResult> cells;
  double wall_ms = 0;
  std::size_t mismatches() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.match; }));
  }
};

/// Runs every cell. Identical (config, property) searches are shared between
/// cells; each distinct search runs once.
inline MatrixResult run_matrix(const Preset& p, const MatrixOptions& opt = {}) {
  auto t0 = std::chrono::steady_clock::now();
  std::mutex mu;
  std::shared_ptr<SearchCache> shared = opt.cache ? opt.cache : std::make_shared<SearchCache>();

  auto search = [&](const ScenarioConfig& cfg, const PropertyId& prop) -> Verdict {
    std::string key = config_to_json(cfg).dump() + "|" + to_string(prop);
    std::promise<Verdict> promise;
    std::shared_future<Verdict> fut;
    bool mine = false;
    {
      std::lock_guard lock(shared->mu);
      auto it = shared->entries.find(key);
      if (it == shared->entries.end()) {
        fut = promise.get_future().share();
        shared->entries.emplace(key, fut);
        mine = true;
      } else {
        fut = it->second;
      }
    }
    if (mine) {
      try {
        promise.set_value(explore(cfg, prop));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  };

  auto attack_any = [&](const Cell& c, const std::set<Assume>& held, CellResult& res) {
    PropertyId prop = parse_property(c.prop);
    for (const std::string& shape : c.shapes) {
      ScenarioConfig base = shape_config(shape);
      base.channel_binding = p.channel_binding;
      base.bounds = p.shape_bounds.at(shape);
      ScenarioConfig cfg = assumption_config(base, held, opt);
      Verdict v = search(cfg, prop);
      res.runs.push_back({shape, render_assumptions(held), v.attack, v.stats});
      if (v.attack) return true;
    }
    return false;
  };

  auto compute = [&](const Cell& c) {
    CellResult res;
    if (c.kind == CellKind::NA) {
      res.rendered = "n/a";
    } else if (c.kind == CellKind::Lightning) {
      std::set<Assume> best(std::begin(kAllAssumptions), std::end(kAllAssumptions));
      res.rendered = attack_any(c, best, res) ? "ATTACK" : "ok(bounded) [" + render_assumptions(best) + "]";
    } else {
      std::set<Assume> held = c.assumptions;
      held.insert(c.implicit.begin(), c.implicit.end());
      if (attack_any(c, held, res)) {
        res.rendered = "ATTACK";
      } else {
        std::set<Assume> kept;
        for (Assume a : c.assumptions) {
          std::set<Assume> relaxed = held;
          relaxed.erase(a);
          if (attack_any(c, relaxed, res)) kept.insert(a);
        }
        res.rendered = "ok(bounded) [" + render_assumptions(kept) + "]";
      }
    }
    res.match = res.rendered == c.expect;
    return res;
  };

  MatrixResult out;
  out.preset = p.name;
  out.cells.resize(p.cells.size());
  unsigned jobs = opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i; (i = next++) < p.cells.size();) {
        out.cells[i] = compute(p.cells[i]);
        if (opt.on_cell) {
          std::lock_guard lock(mu);
          opt.on_cell(i, out.cells[i]);
        }
      }
    }));
  for (auto& w : workers) w.get();
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string cell_label(const Cell& c) {
  std::string s = c.row + " " + std::string(role_name(c.pov));
  if (c.partner) s += "/" + std::string(role_name(*c.partner));
  if (!c.col.empty()) s += " " + c.col;
  return s;
}

/// One line per cell: label, computed, expected, paper entry.
inline std::string render_matrix(const Preset& p, const MatrixResult& r) {
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t w) {
    // Column widths count code points so ¬ and ∧ line up.
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    if (n < w) s.append(w - n, ' ');
    return s;
  };
  os << p.name << " (channel_binding=" << (p.channel_binding ? "true" : "false") << ")\n";
  os << pad("cell", 20) << pad("computed", 34) << pad("expected", 34) << "paper\n";
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const Cell& c = p.cells[i];
    os << pad(cell_label(c), 20) << pad(r.cells[i].rendered, 34) << pad(c.expect, 34) << c.paper;
    if (!r.cells[i].match) os << "   MISMATCH";
    os << '\n';
  }
  os << r.mismatches() << " mismatch(es), " << static_cast<long long>(r.wall_ms) << " ms\n";
  return os.str();
}

}  // namespace akalab
