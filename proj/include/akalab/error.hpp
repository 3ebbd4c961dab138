#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace akalab {

enum class Errc {
  BaseMismatch,
  WrongPhase,
  UnknownSubscriber,
  UnknownSession,
  Mismatch,
  KeyMissing,
  ConfigInvalid,
  TraceDiverged,
  ScriptInvalid,
  ConfigParse,
  IOFailure,
  TraceParse,
  TermParse,
  InvalidArgument,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::BaseMismatch: return "BaseMismatch";
    case Errc::WrongPhase: return "WrongPhase";
    case Errc::UnknownSubscriber: return "UnknownSubscriber";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::Mismatch: return "Mismatch";
    case Errc::KeyMissing: return "KeyMissing";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::TraceDiverged: return "TraceDiverged";
    case Errc::ScriptInvalid: return "ScriptInvalid";
    case Errc::ConfigParse: return "ConfigParse";
    case Errc::IOFailure: return "IOFailure";
    case Errc::TraceParse: return "TraceParse";
    case Errc::TermParse: return "TermParse";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace akalab
