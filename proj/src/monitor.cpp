#include "bciflow/monitor.hpp"

#include <algorithm>
#include <charconv>

namespace bciflow::mon {

namespace {

constexpr const char* kOpNames[] = {
    "open",      "close",        "read",      "write",     "mmap",
    "munmap",    "mprotect",     "clone",     "exec",      "ioctl",
    "sock_create", "sock_listen", "sock_connect", "sock_send", "sock_recv",
    "pipe_read", "pipe_write",   "port_read", "port_write",
};

bool is_read_op(TraceOp op) {
  switch (op) {
    case TraceOp::Open:
    case TraceOp::Read:
    case TraceOp::Mmap:
    case TraceOp::SockRecv:
    case TraceOp::PipeRead:
    case TraceOp::PortRead:
      return true;
    default:
      return false;
  }
}

bool is_write_op(TraceOp op) {
  switch (op) {
    case TraceOp::Write:
    case TraceOp::SockSend:
    case TraceOp::SockConnect:
    case TraceOp::PipeWrite:
    case TraceOp::PortWrite:
    case TraceOp::Ioctl:
      return true;
    default:
      return false;
  }
}

[[noreturn]] void malformed(std::uint64_t seq, const std::string& what) {
  raise(Errc::MalformedEvent, "event seq " + std::to_string(seq) + ": " + what);
}

std::optional<sys::Addr> mem_target(const std::string& target) {
  if (!target.starts_with("mem:")) return std::nullopt;
  sys::Addr addr = 0;
  const char* first = target.data() + 4;
  const char* last = target.data() + target.size();
  int base = 10;
  if (last - first > 2 && first[0] == '0' && (first[1] == 'x' || first[1] == 'X')) {
    first += 2;
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(first, last, addr, base);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return addr;
}

/// Tag names that explain a denial: the set difference driving the failed
/// subset test, in registry order.
std::vector<std::string> violating_names(const sys::World& world, const difc::Label& subject,
                                         const difc::Label& object, difc::Direction direction,
                                         difc::Rule rule) {
  std::set<difc::TagId> diff;
  auto minus = [&](const std::set<difc::TagId>& a, const std::set<difc::TagId>& b) {
    std::set<difc::TagId> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.begin()));
    return out;
  };
  if (rule == difc::Rule::SecrecyLeak) {
    diff = direction == difc::Direction::Read ? minus(object.secrecy, subject.secrecy)
                                              : minus(subject.secrecy, object.secrecy);
  } else {
    diff = direction == difc::Direction::Read ? minus(subject.integrity, object.integrity)
                                              : minus(object.integrity, subject.integrity);
  }
  std::vector<std::string> names;
  names.reserve(diff.size());
  for (difc::TagId id : diff) names.push_back(world.tag_name(id));
  return names;
}

struct EventContext {
  sys::World& world;
  const TraceEvent& event;
  sys::ThreadContext& thread;
};

Decision deny_flow(EventContext& ctx, const sys::ObjectDescriptor* object,
                   const difc::Label& object_label, difc::Direction direction, difc::Rule rule,
                   const std::string& what) {
  // Integrity-denied writes into device ports are the injection signature.
  if (rule == difc::Rule::IntegrityViolation && object &&
      object->kind == sys::ObjectKind::Port && direction == difc::Direction::Write) {
    rule = difc::Rule::UnauthorizedPortInjection;
  }
  ViolationReport report;
  report.seq = ctx.event.seq;
  report.rule = rule;
  report.subject = ctx.event.tid;
  report.object = object ? object->oid : 0;
  report.op = ctx.event.op;
  report.violating = violating_names(ctx.world, ctx.thread.label, object_label, direction,
                                     rule == difc::Rule::UnauthorizedPortInjection
                                         ? difc::Rule::IntegrityViolation
                                         : rule);
  report.note = what;
  report.av_class = classify_av(report, ctx.world);
  return Decision::deny(std::move(report));
}

Decision deny_region(EventContext& ctx, const std::string& what) {
  ViolationReport report;
  report.seq = ctx.event.seq;
  report.rule = difc::Rule::UnmappedAccess;
  report.subject = ctx.event.tid;
  report.object = 0;
  report.op = ctx.event.op;
  report.note = what;
  report.av_class = classify_av(report, ctx.world);
  return Decision::deny(std::move(report));
}

Decision deny_capability(EventContext& ctx, std::vector<std::string> violating,
                         const std::string& what) {
  ViolationReport report;
  report.seq = ctx.event.seq;
  report.rule = difc::Rule::CapabilityDenied;
  report.subject = ctx.event.tid;
  report.object = 0;
  report.op = ctx.event.op;
  report.violating = std::move(violating);
  report.note = what;
  report.av_class = classify_av(report, ctx.world);
  return Decision::deny(std::move(report));
}

/// Flow check of subject against an object label; returns nullopt when the
/// access is allowed.
std::optional<Decision> check_object_flow(EventContext& ctx, const sys::ObjectDescriptor& object,
                                          difc::Direction direction) {
  const difc::Label& label = object.effective_label();
  difc::FlowDecision flow =
      difc::check_flow_allowed(ctx.world.registry(), ctx.thread.label, label, direction);
  // Floating mode: read secrecy is not a barrier, the reader's label rises
  // to cover it instead (the write checks still catch any later leak).
  if (!flow.allowed && flow.violated == difc::Rule::SecrecyLeak &&
      direction == difc::Direction::Read && ctx.world.options().floating_labels) {
    flow = difc::FlowDecision::allow();
  }
  if (flow.allowed) return std::nullopt;
  const char* verb = direction == difc::Direction::Read ? "read of" : "write to";
  return deny_flow(ctx, &object, label, direction, *flow.violated,
                   std::string(verb) + " '" + object.name + "' by tid " +
                       std::to_string(ctx.event.tid));
}

void float_secrecy_on_read(EventContext& ctx, const difc::Label& source) {
  if (!ctx.world.options().floating_labels) return;
  ctx.thread.label.secrecy.insert(source.secrecy.begin(), source.secrecy.end());
}

sys::ObjectDescriptor& resolve_target(EventContext& ctx) {
  const std::string& target = ctx.event.target;
  if (target.empty()) malformed(ctx.event.seq, "empty target");
  sys::ObjectDescriptor* obj = nullptr;
  if (std::all_of(target.begin(), target.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    obj = ctx.world.find_object(std::stoull(target));
  } else {
    obj = ctx.world.find_object_by_name(target);
  }
  if (!obj) malformed(ctx.event.seq, "unknown object '" + target + "'");
  return *obj;
}

sys::ObjectDescriptor& resolve_target_kind(EventContext& ctx, sys::ObjectKind kind) {
  sys::ObjectDescriptor& obj = resolve_target(ctx);
  if (obj.kind != kind) {
    malformed(ctx.event.seq, std::string("target '") + obj.name + "' is a " +
                                 to_string(obj.kind) + ", expected " + to_string(kind));
  }
  return obj;
}

std::uint64_t require_uint(EventContext& ctx, const char* key) {
  if (!ctx.event.args.contains(key) || !ctx.event.args[key].is_number_integer()) {
    malformed(ctx.event.seq, std::string("missing or non-integer arg '") + key + "'");
  }
  if (ctx.event.args[key].is_number_unsigned()) {
    return ctx.event.args[key].get<std::uint64_t>();
  }
  std::int64_t value = ctx.event.args[key].get<std::int64_t>();
  if (value < 0) malformed(ctx.event.seq, std::string("arg '") + key + "' must be nonnegative");
  return static_cast<std::uint64_t>(value);
}

std::string arg_string(EventContext& ctx, const char* key, const std::string& fallback) {
  if (!ctx.event.args.contains(key)) return fallback;
  if (!ctx.event.args[key].is_string()) {
    malformed(ctx.event.seq, std::string("arg '") + key + "' must be a string");
  }
  return ctx.event.args[key].get<std::string>();
}

Decision handle_open(EventContext& ctx) {
  sys::ObjectDescriptor& obj = resolve_target(ctx);
  if (obj.kind == sys::ObjectKind::Thread || obj.kind == sys::ObjectKind::Process) {
    malformed(ctx.event.seq, "cannot open a thread or process object");
  }
  std::string mode = arg_string(ctx, "mode", "r");
  if (mode.find_first_not_of("rw") != std::string::npos || mode.empty()) {
    malformed(ctx.event.seq, "bad open mode '" + mode + "'");
  }
  if (mode.find('r') != std::string::npos) {
    if (auto denied = check_object_flow(ctx, obj, difc::Direction::Read)) return *denied;
  }
  if (mode.find('w') != std::string::npos) {
    if (auto denied = check_object_flow(ctx, obj, difc::Direction::Write)) return *denied;
  }
  ctx.thread.handles.insert(obj.oid);
  if (mode.find('r') != std::string::npos) float_secrecy_on_read(ctx, obj.effective_label());
  return Decision::allow();
}

Decision handle_close(EventContext& ctx) {
  sys::ObjectDescriptor& obj = resolve_target(ctx);
  ctx.thread.handles.erase(obj.oid);  // idempotent
  return Decision::allow();
}

Decision handle_mem_access(EventContext& ctx, sys::Addr addr, difc::Direction direction) {
  const sys::MemoryRegion* region = ctx.world.region_lookup(ctx.thread, addr);
  if (!region) {
    return deny_region(ctx, "access to unmapped address " + std::to_string(addr) + " by tid " +
                                std::to_string(ctx.event.tid));
  }
  bool permitted =
      direction == difc::Direction::Read ? region->perms.read : region->perms.write;
  if (!permitted) {
    return deny_region(ctx, "region rid " + std::to_string(region->rid) + " lacks " +
                                (direction == difc::Direction::Read ? "read" : "write") +
                                " permission");
  }
  difc::FlowDecision flow = difc::check_flow_allowed(ctx.world.registry(), ctx.thread.label,
                                                     region->label, direction);
  if (!flow.allowed && flow.violated == difc::Rule::SecrecyLeak &&
      direction == difc::Direction::Read && ctx.world.options().floating_labels) {
    flow = difc::FlowDecision::allow();
  }
  if (!flow.allowed) {
    return deny_flow(ctx, nullptr, region->label, direction, *flow.violated,
                     std::string(direction == difc::Direction::Read ? "read of" : "write to") +
                         " labeled region rid " + std::to_string(region->rid));
  }
  if (direction == difc::Direction::Read) float_secrecy_on_read(ctx, region->label);
  return Decision::allow();
}

Decision handle_read_write(EventContext& ctx, difc::Direction direction) {
  if (auto addr = mem_target(ctx.event.target)) {
    return handle_mem_access(ctx, *addr, direction);
  }
  sys::ObjectDescriptor& obj = resolve_target_kind(ctx, sys::ObjectKind::File);
  if (auto denied = check_object_flow(ctx, obj, direction)) return *denied;
  if (direction == difc::Direction::Read) float_secrecy_on_read(ctx, obj.effective_label());
  return Decision::allow();
}

Decision handle_mmap(EventContext& ctx) {
  sys::ObjectDescriptor& file = resolve_target_kind(ctx, sys::ObjectKind::File);
  std::uint64_t length = require_uint(ctx, "length");
  sys::Perms perms = sys::Perms::parse(arg_string(ctx, "perms", "r"));
  // Mapping a file reads its contents into the new region.
  if (auto denied = check_object_flow(ctx, file, difc::Direction::Read)) return *denied;
  sys::Addr base = ctx.event.args.contains("addr") ? require_uint(ctx, "addr")
                                                   : ctx.world.reserve_base(length);
  ctx.world.map_region(ctx.event.tid, base, length, perms, file.effective_label());
  float_secrecy_on_read(ctx, file.effective_label());
  return Decision::allow();
}

Decision handle_munmap(EventContext& ctx) {
  sys::Addr addr = require_uint(ctx, "addr");
  const sys::MemoryRegion* region = ctx.world.region_lookup(ctx.thread, addr);
  if (!region) {
    return deny_region(ctx, "munmap of unmapped address " + std::to_string(addr));
  }
  ctx.world.unmap_region(ctx.event.tid, region->rid);
  return Decision::allow();
}

Decision handle_mprotect(EventContext& ctx) {
  sys::Addr addr = require_uint(ctx, "addr");
  sys::Perms perms = sys::Perms::parse(arg_string(ctx, "perms", "r"));
  const sys::MemoryRegion* region = ctx.world.region_lookup(ctx.thread, addr);
  if (!region) {
    return deny_region(ctx, "mprotect of unmapped address " + std::to_string(addr));
  }
  // Safe: region_lookup returned a live region owned by this thread.
  const_cast<sys::MemoryRegion*>(region)->perms = perms;
  return Decision::allow();
}

Decision handle_clone(EventContext& ctx) {
  sys::Tid child = require_uint(ctx, "child");
  if (ctx.world.find_thread(child)) {
    malformed(ctx.event.seq, "clone child tid " + std::to_string(child) + " already exists");
  }
  sys::ThreadContext& ctx_child = ctx.world.create_thread(child, ctx.thread.process);
  ctx_child.label = ctx.thread.label;
  ctx_child.caps = ctx.thread.caps;
  return Decision::allow();
}

Decision handle_exec(EventContext& ctx) {
  arg_string(ctx, "image", "");  // validated for type only; image name is advisory
  std::string role = arg_string(ctx, "role", "");
  difc::CapabilityList role_caps;
  if (!role.empty()) {
    const auto* grants = ctx.world.find_role(role);
    if (!grants) malformed(ctx.event.seq, "unknown policy role '" + role + "'");
    for (const auto& [tag_name, priv] : *grants) {
      auto tag = ctx.world.find_tag(tag_name);
      if (!tag) malformed(ctx.event.seq, "role '" + role + "' names unknown tag '" + tag_name + "'");
      role_caps.grant(tag->id, priv);
    }
  }
  difc::CapabilityList requested;
  std::vector<std::string> escalated;
  if (ctx.event.args.contains("grants")) {
    if (!ctx.event.args["grants"].is_array()) malformed(ctx.event.seq, "grants must be an array");
    for (const auto& entry : ctx.event.args["grants"]) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
          !entry[1].is_string()) {
        malformed(ctx.event.seq, "grants entries must be [tag, privilege] pairs");
      }
      std::string tag_name = entry[0].get<std::string>();
      std::string priv_name = entry[1].get<std::string>();
      if (priv_name != "ADD" && priv_name != "REMOVE") {
        malformed(ctx.event.seq, "bad privilege '" + priv_name + "'");
      }
      difc::Privilege priv =
          priv_name == "ADD" ? difc::Privilege::Add : difc::Privilege::Remove;
      auto tag = ctx.world.find_tag(tag_name);
      if (!tag) malformed(ctx.event.seq, "grants name unknown tag '" + tag_name + "'");
      requested.grant(tag->id, priv);
      if (!role_caps.holds(tag->id, priv)) {
        escalated.push_back(tag_name + (priv == difc::Privilege::Add ? "+" : "-"));
      }
    }
  }
  if (!escalated.empty()) {
    return deny_capability(ctx, escalated,
                           "exec requested capabilities beyond role '" + role + "'");
  }
  // Capabilities reset to the image's policy role; labels persist.
  ctx.thread.caps = requested.grants.empty() ? role_caps : requested;
  return Decision::allow();
}

Decision handle_ioctl(EventContext& ctx) {
  sys::ObjectDescriptor& obj = resolve_target(ctx);
  if (obj.kind != sys::ObjectKind::Port && obj.kind != sys::ObjectKind::File) {
    malformed(ctx.event.seq, "ioctl target must be a port or device file");
  }
  if (auto denied = check_object_flow(ctx, obj, difc::Direction::Write)) return *denied;
  return Decision::allow();
}

Decision handle_sock_create(EventContext& ctx) {
  if (ctx.event.target.empty()) malformed(ctx.event.seq, "empty socket name");
  if (ctx.world.find_object_by_name(ctx.event.target)) {
    malformed(ctx.event.seq, "socket '" + ctx.event.target + "' already exists");
  }
  ctx.world.create_object(sys::ObjectKind::Socket, ctx.event.target, std::nullopt,
                          ctx.thread.process);
  return Decision::allow();
}

Decision handle_sock_simple(EventContext& ctx, difc::Direction direction) {
  sys::ObjectDescriptor& obj = resolve_target_kind(ctx, sys::ObjectKind::Socket);
  if (auto denied = check_object_flow(ctx, obj, direction)) return *denied;
  if (direction == difc::Direction::Read) float_secrecy_on_read(ctx, obj.effective_label());
  return Decision::allow();
}

Decision handle_pipe(EventContext& ctx, difc::Direction direction) {
  sys::ObjectDescriptor& obj = resolve_target_kind(ctx, sys::ObjectKind::Pipe);
  if (auto denied = check_object_flow(ctx, obj, direction)) return *denied;
  if (direction == difc::Direction::Read) float_secrecy_on_read(ctx, obj.effective_label());
  return Decision::allow();
}

Decision handle_port(EventContext& ctx, difc::Direction direction) {
  sys::ObjectDescriptor& obj = resolve_target_kind(ctx, sys::ObjectKind::Port);
  if (auto denied = check_object_flow(ctx, obj, direction)) return *denied;
  if (direction == difc::Direction::Read) float_secrecy_on_read(ctx, obj.effective_label());
  return Decision::allow();
}

}  // namespace

const char* to_string(TraceOp op) { return kOpNames[static_cast<int>(op)]; }

std::optional<TraceOp> trace_op_from(const std::string& name) {
  for (int i = 0; i < static_cast<int>(std::size(kOpNames)); ++i) {
    if (name == kOpNames[i]) return static_cast<TraceOp>(i);
  }
  return std::nullopt;
}

const char* to_string(AvClass av) {
  switch (av) {
    case AvClass::AV1: return "AV1";
    case AvClass::AV2: return "AV2";
    case AvClass::AV3: return "AV3";
    case AvClass::AV4: return "AV4";
    case AvClass::AV5: return "AV5";
    case AvClass::AV6: return "AV6";
  }
  return "unclassified";
}

std::optional<AvClass> av_class_from(const std::string& name) {
  for (AvClass av : {AvClass::AV1, AvClass::AV2, AvClass::AV3, AvClass::AV4, AvClass::AV5,
                     AvClass::AV6}) {
    if (name == to_string(av)) return av;
  }
  return std::nullopt;
}

Decision on_event(sys::World& world, const TraceEvent& event) {
  sys::ThreadContext* thread = world.find_thread(event.tid);
  if (!thread) malformed(event.seq, "unknown tid " + std::to_string(event.tid));
  if (!event.args.is_object()) malformed(event.seq, "args must be a JSON object");
  EventContext ctx{world, event, *thread};
  switch (event.op) {
    case TraceOp::Open: return handle_open(ctx);
    case TraceOp::Close: return handle_close(ctx);
    case TraceOp::Read: return handle_read_write(ctx, difc::Direction::Read);
    case TraceOp::Write: return handle_read_write(ctx, difc::Direction::Write);
    case TraceOp::Mmap: return handle_mmap(ctx);
    case TraceOp::Munmap: return handle_munmap(ctx);
    case TraceOp::Mprotect: return handle_mprotect(ctx);
    case TraceOp::Clone: return handle_clone(ctx);
    case TraceOp::Exec: return handle_exec(ctx);
    case TraceOp::Ioctl: return handle_ioctl(ctx);
    case TraceOp::SockCreate: return handle_sock_create(ctx);
    case TraceOp::SockListen:
      resolve_target_kind(ctx, sys::ObjectKind::Socket);
      return Decision::allow();
    case TraceOp::SockConnect: return handle_sock_simple(ctx, difc::Direction::Write);
    case TraceOp::SockSend: return handle_sock_simple(ctx, difc::Direction::Write);
    case TraceOp::SockRecv: return handle_sock_simple(ctx, difc::Direction::Read);
    case TraceOp::PipeRead: return handle_pipe(ctx, difc::Direction::Read);
    case TraceOp::PipeWrite: return handle_pipe(ctx, difc::Direction::Write);
    case TraceOp::PortRead: return handle_port(ctx, difc::Direction::Read);
    case TraceOp::PortWrite: return handle_port(ctx, difc::Direction::Write);
  }
  malformed(event.seq, "unknown op");
}

ReplaySummary replay(sys::World& world, const std::vector<TraceEvent>& trace) {
  ReplaySummary summary;
  std::uint64_t last_seq = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceEvent& event = trace[i];
    try {
      if (i > 0 && event.seq <= last_seq) {
        malformed(event.seq, "sequence number not strictly increasing (previous " +
                                 std::to_string(last_seq) + ")");
      }
      last_seq = event.seq;
      Decision decision = on_event(world, event);
      summary.processed += 1;
      if (decision.allowed) {
        summary.allowed += 1;
      } else {
        summary.denied += 1;
        const ViolationReport& report = *decision.report;
        summary.denied_by_rule[difc::to_string(report.rule)] += 1;
        summary.denied_by_av[report.av_class ? to_string(*report.av_class) : "unclassified"] += 1;
        summary.reports.push_back(report);
      }
    } catch (const Error& err) {
      summary.abort = ReplaySummary::Abort{i, err.what()};
      break;
    }
  }
  return summary;
}

std::optional<AvClass> classify_av(const ViolationReport& report, const sys::World& world,
                                   const ClassifierConfig& config) {
  auto mentions = [&](const std::string& marker) {
    return std::any_of(report.violating.begin(), report.violating.end(),
                       [&](const std::string& name) {
                         return name.find(marker) != std::string::npos;
                       });
  };
  const sys::ObjectDescriptor* object = world.find_object(report.object);
  sys::ObjectKind kind = object ? object->kind : sys::ObjectKind::MemoryRegion;

  switch (report.rule) {
    case difc::Rule::UnauthorizedPortInjection:
      return AvClass::AV6;
    case difc::Rule::CapabilityDenied:
      return AvClass::AV3;
    case difc::Rule::SecrecyLeak:
      // Reading data in transit (sockets, ports, pipes) is sniffing.
      if (is_read_op(report.op) && (kind == sys::ObjectKind::Socket ||
                                    kind == sys::ObjectKind::Port ||
                                    kind == sys::ObjectKind::Pipe)) {
        return AvClass::AV1;
      }
      // Touching the model file or its memory is the white-box precursor.
      if ((kind == sys::ObjectKind::File || kind == sys::ObjectKind::MemoryRegion) &&
          mentions(config.model_marker)) {
        return AvClass::AV4;
      }
      // Relaying live stream data out through a writable channel.
      if (is_write_op(report.op) && mentions(config.stream_marker)) {
        return AvClass::AV1;
      }
      return AvClass::AV2;
    case difc::Rule::IntegrityViolation:
      return kind == sys::ObjectKind::Port ? AvClass::AV6 : AvClass::AV2;
    case difc::Rule::UnmappedAccess:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace bciflow::mon
