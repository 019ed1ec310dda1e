#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bciflow/objects.hpp"

namespace bciflow::mon {

enum class TraceOp {
  Open,
  Close,
  Read,
  Write,
  Mmap,
  Munmap,
  Mprotect,
  Clone,
  Exec,
  Ioctl,
  SockCreate,
  SockListen,
  SockConnect,
  SockSend,
  SockRecv,
  PipeRead,
  PipeWrite,
  PortRead,
  PortWrite,
};

const char* to_string(TraceOp op);
std::optional<TraceOp> trace_op_from(const std::string& name);

/// One timestamped operation by a thread on an object. `target` names an
/// object, or uses the form "mem:<address>" for memory accesses. `args`
/// holds op-specific fields (mode, addr, length, image, role, ...).
struct TraceEvent {
  std::uint64_t seq = 0;
  sys::Tid tid = 0;
  TraceOp op = TraceOp::Read;
  std::string target;
  nlohmann::json args = nlohmann::json::object();

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class AvClass { AV1, AV2, AV3, AV4, AV5, AV6 };

const char* to_string(AvClass av);
std::optional<AvClass> av_class_from(const std::string& name);

struct ViolationReport {
  std::uint64_t seq = 0;
  difc::Rule rule = difc::Rule::SecrecyLeak;
  sys::Tid subject = 0;
  sys::Oid object = 0;  // 0 when the target is a memory address, not an object
  TraceOp op = TraceOp::Read;
  std::vector<std::string> violating;  // names of the tags behind the denial
  std::optional<AvClass> av_class;
  std::string note;

  friend bool operator==(const ViolationReport&, const ViolationReport&) = default;
};

struct Decision {
  bool allowed = false;
  std::optional<ViolationReport> report;

  static Decision allow() { return {true, std::nullopt}; }
  static Decision deny(ViolationReport r) { return {false, std::move(r)}; }
};

/// Applies one event to the world. Allowed events may update state (open
/// registers a handle, clone copies the parent's labels and capabilities,
/// exec swaps the capability set for the image's policy role). Denied events
/// leave the world untouched and return the report. Throws MalformedEvent
/// for unknown tids, unknown targets, kind mismatches, or missing args.
Decision on_event(sys::World& world, const TraceEvent& event);

struct ReplaySummary {
  std::uint64_t processed = 0;
  std::uint64_t allowed = 0;
  std::uint64_t denied = 0;
  std::map<std::string, std::uint64_t> denied_by_rule;
  std::map<std::string, std::uint64_t> denied_by_av;  // "AV1".."AV6" or "unclassified"
  std::vector<ViolationReport> reports;

  struct Abort {
    std::uint64_t index = 0;  // position in the trace where replay stopped
    std::string message;
  };
  std::optional<Abort> abort;
};

/// Folds on_event over the trace. Rejects out-of-order sequence numbers.
/// A malformed event aborts the replay; the partial summary carries the
/// error position and message.
ReplaySummary replay(sys::World& world, const std::vector<TraceEvent>& trace);

/// Tag-name markers the default attack-vector table keys on. The paper's
/// policy table is declarative; these defaults reconstruct it from the
/// evaluation prose and can be overridden by embedders.
struct ClassifierConfig {
  std::string model_marker = "model";    // matches f_model style tags
  std::string stream_marker = "stream";  // matches live-headset-data tags
};

/// Deterministic rule -> attack-vector mapping. Falls back to nullopt for
/// reports with no vector interpretation (e.g. unmapped-memory access).
std::optional<AvClass> classify_av(const ViolationReport& report, const sys::World& world,
                                   const ClassifierConfig& config = {});

}  // namespace bciflow::mon
