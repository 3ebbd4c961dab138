#pragma once

// The failure-message distinguisher: a challenge recorded from one session
// of ue0 is replayed either to ue0 again (SAME) or to ue1 (DIFF). ue0 has
// already consumed the challenge's SQN and answers Sync_Failure; ue1 cannot
// check the MAC and answers Mac_Failure.

#include <akalab/scenario.hpp>

#include <string>
#include <vector>

namespace akalab {

struct DistinguisherResult {
  Term same;  // failure constant answered in world SAME
  Term diff;  // ... and in world DIFF
  bool distinguished = false;
  Trace same_trace;
  Trace diff_trace;
};

namespace detail {

inline Action act(const std::string& text) { return parse_action(text); }

// The public constant heading the last message `ue` sent.
inline Term last_failure(const Trace& t, const std::string& ue) {
  for (auto it = t.rbegin(); it != t.rend(); ++it)
    if (it->ev == EvKind::Send && it->actor == ue && it->term)
      return it->term->is_pair() ? it->term->kid(0) : *it->term;
  throw Error(Errc::ScriptInvalid, ue + " sent nothing");
}

}  // namespace detail

/// Needs at least two subscribers and two sessions per subscriber; reveals
/// are ignored.
inline DistinguisherResult run_linkability_distinguisher(ScenarioConfig cfg) {
  cfg.reveals.clear();
  cfg.n_subscribers = std::max(cfg.n_subscribers, 2);
  cfg.n_sessions = std::max(cfg.n_sessions, 2);
  validate(cfg);

  std::vector<Action> first = {detail::act("start ue0 sn_0"), detail::act("auto")};
  Trace recorded = scripted_run(cfg, first);
  std::optional<Term> challenge;
  for (const Event& e : recorded)
    if (e.ev == EvKind::Send && e.channel == "radio" && e.actor.starts_with("sn_") && e.term && e.term->is_pair()) {
      challenge = *e.term;
      break;
    }
  if (!challenge) throw Error(Errc::ScriptInvalid, "no challenge was sent");

  auto world = [&](const std::string& ue) {
    std::vector<Action> s = first;
    s.push_back(detail::act("start " + ue + " sn_0"));
    s.push_back(detail::act("inject " + ue + " " + render(*challenge)));
    return scripted_run(cfg, s);
  };
  DistinguisherResult r;
  r.same_trace = world("ue0");
  r.diff_trace = world("ue1");
  r.same = detail::last_failure(r.same_trace, "ue0");
  r.diff = detail::last_failure(r.diff_trace, "ue1");
  r.distinguished = r.same != r.diff && r.same.is_const() && r.diff.is_const();
  return r;
}

}  // namespace akalab
