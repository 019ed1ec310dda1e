#pragma once

#include <stdexcept>
#include <string>

namespace bciflow {

/// Error codes for every failure the engine can report. Each thrown Error
/// carries exactly one of these so callers can branch without parsing text.
enum class Errc {
  CapacityExceeded,
  UnknownTag,
  TagKindMismatch,
  CapabilityDenied,
  DuplicateName,
  UnknownObject,
  OverlapError,
  DomainsExhausted,
  NotOwner,
  UnknownRegion,
  UnknownTid,
  UnknownRole,
  AlreadyEnabled,
  NotEnabled,
  OutOfRegion,
  DoubleFree,
  MalformedEvent,
  ParseError,
  ShapeMismatch,
  TauOutOfRange,
  BadWindow,
  BadOrder,
  InvalidParams,
  ConvergenceFailure,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace bciflow
