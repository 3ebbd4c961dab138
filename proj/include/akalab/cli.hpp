#pragma once

// Command-line front end: run, matrix, show-trace.
//
// Exit codes: 0 all outcomes as expected; 1 usage, config or I/O error;
// 2 an attack was found where none was expected (run) or a matrix cell
// differs from its expectation file (matrix); 3 an expected attack was not
// found within bounds (run).

#include <akalab/config.hpp>
#include <akalab/linkability.hpp>
#include <akalab/matrix.hpp>
#include <akalab/report.hpp>
#include <akalab/scenario.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace akalab {

inline const std::vector<std::string>& default_properties() {
  static const std::vector<std::string> props = {
      "secrecy:k",           "secrecy:kseaf",       "secrecy:supi",        "weak:UE:SN",
      "weak:SN:UE",          "niagree:UE:SN:kseaf", "niagree:SN:UE:kseaf", "niagree:UE:HN:kseaf",
      "niagree:HN:UE:kseaf", "niagree:SN:HN:supi",  "invariant:sqn"};
  return props;
}

struct RunOptions {
  std::string config_path;
  std::vector<std::string> props;
  std::string out_path;
  std::string trace_dir;
  std::optional<std::uint64_t> seed;
  std::string bounds;
  std::vector<std::string> fixes;
  bool no_keyconf = false;
  bool no_binding = false;
};

/// Applies command-line overrides to a loaded config.
inline void apply_overrides(ScenarioConfig& c, const RunOptions& o) {
  if (o.seed) c.seed = *o.seed;
  if (!o.bounds.empty()) {
    std::vector<std::size_t> v;
    std::stringstream ss(o.bounds);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stoul(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "--bounds expects max_steps,max_injections,depth");
      }
    }
    if (v.size() != 3) throw Error(Errc::InvalidArgument, "--bounds expects max_steps,max_injections,depth");
    c.bounds = Bounds{v[0], v[1], v[2]};
  }
  for (const std::string& f : o.fixes) {
    if (f == "supi-suci") c.fixes.supi_suci_pairing = true;
    else if (f == "mac-snname") c.fixes.mac_binds_snname = true;
    else if (f == "uni-keyconf") c.fixes.unidirectional_keyconf = true;
    else throw Error(Errc::InvalidArgument, "--fix expects supi-suci, mac-snname or uni-keyconf");
  }
  if (o.no_keyconf) {
    c.fixes.key_confirmation = false;
    c.fixes.unidirectional_keyconf = false;
  }
  if (o.no_binding) c.channel_binding = false;
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(Errc::InvalidArgument, e.what());
  }
}

inline std::string trace_file_name(const PropertyId& p) {
  std::string s = to_string(p);
  for (char& ch : s)
    if (ch == ':') ch = '_';
  return s + ".jsonl";
}

inline int cmd_run(const RunOptions& o, std::ostream& out) {
  ConfigFile file = load_config(o.config_path);
  apply_overrides(file.config, o);
  std::map<PropertyId, bool> expected;
  for (const Expectation& e : file.expectations) expected[e.prop] = e.attack;

  std::vector<PropertyId> props;
  if (!o.props.empty()) {
    for (const std::string& p : o.props) props.push_back(parse_property(p));
  } else if (!file.expectations.empty()) {
    for (const Expectation& e : file.expectations) props.push_back(e.prop);
  } else {
    for (const std::string& p : default_properties()) props.push_back(parse_property(p));
  }

  RunReport report;
  report.config_digest = config_digest(file.config);
  report.timestamp = utc_timestamp();
  for (const PropertyId& p : props) {
    VerdictRecord rec;
    rec.prop = p;
    rec.expect_attack = expected.contains(p) && expected.at(p);
    Trace trace;
    if (p.kind == PropKind::Linkability) {
      auto t0 = std::chrono::steady_clock::now();
      DistinguisherResult d = run_linkability_distinguisher(file.config);
      rec.attack = d.distinguished;
      rec.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      trace = d.same_trace;
    } else {
      Verdict v = explore(file.config, p);
      rec.attack = v.attack;
      rec.stats = v.stats;
      trace = std::move(v.trace);
    }
    if (rec.attack && !o.trace_dir.empty()) {
      std::filesystem::create_directories(o.trace_dir);
      std::ofstream tf(std::filesystem::path(o.trace_dir) / trace_file_name(p));
      if (!tf) throw Error(Errc::IOFailure, "cannot write traces to " + o.trace_dir);
      write_trace(tf, trace);
    }
    report.verdicts.push_back(rec);
  }

  out << render_report(report);
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path);
    if (!f) throw Error(Errc::IOFailure, "cannot write " + o.out_path);
    f << report_to_json(report).dump(2) << "\n";
  }
  bool unexpected = false, missing = false;
  for (const VerdictRecord& v : report.verdicts) {
    if (v.attack && !v.expect_attack) unexpected = true;
    if (!v.attack && v.expect_attack) missing = true;
  }
  return unexpected ? 2 : missing ? 3 : 0;
}

struct MatrixCliOptions {
  std::string preset;
  std::string out_path;
  bool uni_keyconf = false;
  unsigned jobs = 0;
};

inline int cmd_matrix(const MatrixCliOptions& o, std::ostream& out) {
  Preset p = load_preset(o.preset);
  MatrixOptions mo;
  mo.uni_keyconf = o.uni_keyconf;
  mo.jobs = o.jobs;
  MatrixResult r = run_matrix(p, mo);
  out << render_matrix(p, r);
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path);
    if (!f) throw Error(Errc::IOFailure, "cannot write " + o.out_path);
    f << matrix_to_json(p, r).dump(2) << "\n";
  }
  return r.mismatches() == 0 ? 0 : 2;
}

inline int cmd_show_trace(const std::string& path, const std::string& export_path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IOFailure, "cannot open " + path);
  Trace t = read_trace(in);
  out << render_msc(t);
  if (!export_path.empty()) {
    std::ofstream f(export_path);
    if (!f) throw Error(Errc::IOFailure, "cannot write " + export_path);
    write_trace(f, t);
  }
  return 0;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Symbolic 5G AKA lab"};
  app.require_subcommand(1);

  RunOptions ro;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Search for attacks on the properties of a scenario config");
  run->add_option("--config", ro.config_path, "Scenario config (JSON, schema 1)")->required();
  run->add_option("--prop", ro.props, "Property to check, e.g. niagree:SN:UE:kseaf (repeatable)");
  run->add_option("--out", ro.out_path, "Write the RunReport as JSON here");
  run->add_option("--trace-dir", ro.trace_dir, "Export attack traces into this directory");
  auto* seed_opt = run->add_option("--seed", seed, "Fresh-name counter seed");
  run->add_option("--bounds", ro.bounds, "max_steps,max_injections,depth");
  run->add_option("--fix", ro.fixes, "supi-suci | mac-snname | uni-keyconf (repeatable)");
  run->add_flag("--no-keyconf", ro.no_keyconf, "Skip the key-confirmation roundtrip");
  run->add_flag("--no-binding", ro.no_binding, "Make the SN-HN channel non-binding");

  MatrixCliOptions mo;
  auto* matrix = app.add_subcommand("matrix", "Recompute a minimal-assumption table and compare with its expectation file");
  matrix->add_option("preset", mo.preset, "table1 | table2 | table3, or a preset file path")->required();
  matrix->add_option("--out", mo.out_path, "Write the cell results as JSON here");
  matrix->add_flag("--uni-keyconf", mo.uni_keyconf, "Use unidirectional key confirmation wherever k-c holds");
  matrix->add_option("--jobs", mo.jobs, "Parallel workers (default: hardware concurrency)");

  std::string trace_path, export_path;
  auto* show = app.add_subcommand("show-trace", "Print a trace as a message sequence");
  show->add_option("trace", trace_path, "Trace file (JSON lines)")->required();
  show->add_option("--export", export_path, "Re-export the parsed trace here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) ro.seed = seed;

  try {
    if (*run) return cmd_run(ro, out);
    if (*matrix) return cmd_matrix(mo, out);
    if (*show) return cmd_show_trace(trace_path, export_path, out);
  } catch (const Error& e) {
    err << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace akalab
