#include "bciflow/trace.hpp"

#include <algorithm>
#include <random>

namespace bciflow::trace {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::set<std::string> kEventKeys = {"seq", "tid", "op", "target", "args"};

ordered_json event_to_ordered(const mon::TraceEvent& event) {
  ordered_json out;
  out["seq"] = event.seq;
  out["tid"] = event.tid;
  out["op"] = mon::to_string(event.op);
  out["target"] = event.target;
  out["args"] = event.args;  // plain json object: keys already sorted
  return out;
}

mon::TraceEvent event_from_json(const json& doc, std::size_t offset) {
  if (!doc.is_object()) {
    throw TraceParseError(offset, "event line must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (!kEventKeys.contains(key)) {
      throw TraceParseError(offset, "unknown field '" + key + "'");
    }
  }
  mon::TraceEvent event;
  if (!doc.contains("seq") || !doc["seq"].is_number_unsigned()) {
    throw TraceParseError(offset, "missing or non-integer 'seq'");
  }
  event.seq = doc["seq"].get<std::uint64_t>();
  if (!doc.contains("tid") || !doc["tid"].is_number_unsigned()) {
    throw TraceParseError(offset, "missing or non-integer 'tid'");
  }
  event.tid = doc["tid"].get<std::uint64_t>();
  if (!doc.contains("op") || !doc["op"].is_string()) {
    throw TraceParseError(offset, "missing or non-string 'op'");
  }
  const std::string op_name = doc["op"].get<std::string>();
  auto op = mon::trace_op_from(op_name);
  if (!op) {
    throw TraceParseError(offset, "unknown op '" + op_name + "'");
  }
  event.op = *op;
  if (!doc.contains("target") || !doc["target"].is_string()) {
    throw TraceParseError(offset, "missing or non-string 'target'");
  }
  event.target = doc["target"].get<std::string>();
  if (doc.contains("args")) {
    if (!doc["args"].is_object()) {
      throw TraceParseError(offset, "'args' must be an object");
    }
    event.args = doc["args"];
  }
  return event;
}

}  // namespace

std::vector<mon::TraceEvent> parse_trace(const std::string& bytes) {
  std::vector<mon::TraceEvent> events;
  std::set<std::uint64_t> seen;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    std::size_t end = eol == std::string::npos ? bytes.size() : eol;
    if (end == pos) {
      throw TraceParseError(pos, "empty line");
    }
    std::string line = bytes.substr(pos, end - pos);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& err) {
      std::size_t inner = err.byte > 0 ? err.byte - 1 : 0;
      throw TraceParseError(pos + std::min(inner, line.size()),
                            std::string("invalid JSON: ") + err.what());
    }
    mon::TraceEvent event = event_from_json(doc, pos);
    if (!seen.insert(event.seq).second) {
      throw TraceParseError(pos, "duplicate seq " + std::to_string(event.seq));
    }
    events.push_back(std::move(event));
    pos = end + 1;
  }
  return events;
}

std::string serialize_trace(const std::vector<mon::TraceEvent>& events) {
  std::string out;
  for (const mon::TraceEvent& event : events) {
    out += event_to_ordered(event).dump();
    out += '\n';
  }
  return out;
}

const char* to_string(ScenarioClass av) {
  switch (av) {
    case ScenarioClass::Benign: return "benign";
    case ScenarioClass::AV1: return "AV1";
    case ScenarioClass::AV2: return "AV2";
    case ScenarioClass::AV3: return "AV3";
    case ScenarioClass::AV4: return "AV4";
    case ScenarioClass::AV5: return "AV5";
    case ScenarioClass::AV6: return "AV6";
  }
  return "benign";
}

std::optional<ScenarioClass> scenario_class_from(const std::string& name) {
  for (ScenarioClass av :
       {ScenarioClass::Benign, ScenarioClass::AV1, ScenarioClass::AV2, ScenarioClass::AV3,
        ScenarioClass::AV4, ScenarioClass::AV5, ScenarioClass::AV6}) {
    if (name == to_string(av)) return av;
  }
  return std::nullopt;
}

namespace {

// Fixed cast of the generated world.
constexpr sys::Tid kAuthority = 1000;  // policy-authority session
constexpr sys::Tid kApp = 1;           // the labeled BCI application thread
constexpr sys::Tid kAttacker = 2;      // foreign unlabeled process
constexpr sys::Tid kBystander = 3;     // unrelated benign process
constexpr sys::Tid kHelper = 4;        // compromised helper holding record data
constexpr sys::Tid kRelay = 5;         // compromised relay holding stream data

constexpr const char* kPort = "/dev/ttyUSB0";
constexpr const char* kRecordFile = "/data/eegIDRecord.csv";
constexpr const char* kModelFile = "/opt/bci/model.bin";
constexpr const char* kLogFile = "/data/app.log";
constexpr const char* kAppSocket = "sock:app";
constexpr const char* kEvilSocket = "sock:evil";
constexpr const char* kAppPipe = "pipe:app";
constexpr const char* kScratchFile = "/tmp/scratch";
constexpr const char* kNotesFile = "/home/user/notes.txt";

constexpr const char* kTagStream = "headset_stream";
constexpr const char* kTagRecord = "eeg_record";
constexpr const char* kTagModel = "model_weights";
constexpr const char* kTagPortIn = "port_input";

// First base handed out by the world's bump allocator; the setup's single
// a_mmap lands here. Kept in sync with World::reserve_base.
constexpr sys::Addr kAppRegionBase = 0x10000;

ordered_json call_enable(sys::Tid tid) {
  return ordered_json{{"call", "enable"}, {"tid", tid}};
}

ordered_json call_tag(const char* name, const char* kind) {
  return ordered_json{{"call", "tag"}, {"tid", kAuthority}, {"name", name}, {"kind", kind}};
}

ordered_json call_create(const char* kind, const char* name, std::vector<std::string> flags,
                         std::vector<std::string> tags, const char* direction = nullptr) {
  ordered_json out{{"call", "create"}, {"tid", kAuthority}, {"kind", kind}, {"name", name},
                   {"flags", flags},   {"tags", tags}};
  if (direction) out["direction"] = direction;
  return out;
}

ordered_json call_add(const char* name, std::vector<std::string> flags,
                      std::vector<std::string> tags) {
  return ordered_json{
      {"call", "add"}, {"tid", kAuthority}, {"name", name}, {"flags", flags}, {"tags", tags}};
}

ordered_json call_grant(sys::Tid tid, const char* tag) {
  return ordered_json{
      {"call", "grant"}, {"owner", kAuthority}, {"tid", tid}, {"tag", tag}, {"priv", "ADD"}};
}

ordered_json call_raise(sys::Tid tid, const char* tag) {
  return ordered_json{{"call", "raise"}, {"tid", tid}, {"tag", tag}};
}

ordered_json call_role(const char* name, std::vector<std::pair<std::string, std::string>> grants) {
  ordered_json list = ordered_json::array();
  for (const auto& [tag, priv] : grants) list.push_back({tag, priv});
  return ordered_json{{"call", "role"}, {"name", name}, {"grants", list}};
}

std::vector<json> base_setup() {
  std::vector<ordered_json> calls;
  calls.push_back(call_enable(kAuthority));
  calls.push_back(call_tag(kTagStream, "secrecy"));
  calls.push_back(call_tag(kTagRecord, "secrecy"));
  calls.push_back(call_tag(kTagModel, "secrecy"));
  calls.push_back(call_tag(kTagPortIn, "integrity"));

  calls.push_back(call_create("port", kPort, {"SLABEL"}, {kTagStream}, "in"));
  calls.push_back(call_add(kPort, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("file", kRecordFile, {"SLABEL"}, {kTagStream, kTagRecord}));
  calls.push_back(call_add(kRecordFile, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("file", kModelFile, {"SLABEL"}, {kTagModel}));
  calls.push_back(call_add(kModelFile, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("file", kLogFile, {"SLABEL"}, {kTagStream, kTagRecord, kTagModel}));
  calls.push_back(call_add(kLogFile, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("socket", kAppSocket, {"SLABEL"}, {kTagStream, kTagRecord, kTagModel}));
  calls.push_back(call_add(kAppSocket, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("pipe", kAppPipe, {"SLABEL"}, {kTagStream, kTagRecord, kTagModel}));
  calls.push_back(call_add(kAppPipe, {"ILABEL"}, {kTagPortIn}));
  calls.push_back(call_create("socket", kEvilSocket, {}, {}));
  calls.push_back(call_create("file", kScratchFile, {}, {}));
  calls.push_back(call_create("file", kNotesFile, {}, {}));

  calls.push_back(call_enable(kApp));
  for (const char* tag : {kTagStream, kTagRecord, kTagModel, kTagPortIn}) {
    calls.push_back(call_grant(kApp, tag));
    calls.push_back(call_raise(kApp, tag));
  }
  calls.push_back(call_enable(kAttacker));
  calls.push_back(call_enable(kBystander));
  calls.push_back(call_enable(kHelper));
  calls.push_back(call_grant(kHelper, kTagRecord));
  calls.push_back(call_raise(kHelper, kTagRecord));
  calls.push_back(call_enable(kRelay));
  calls.push_back(call_grant(kRelay, kTagStream));
  calls.push_back(call_raise(kRelay, kTagStream));

  calls.push_back(call_role("bci_app", {{kTagStream, "ADD"},
                                        {kTagRecord, "ADD"},
                                        {kTagModel, "ADD"},
                                        {kTagPortIn, "ADD"}}));
  calls.push_back(call_role("untrusted", {}));

  calls.push_back(ordered_json{{"call", "mmap"},
                               {"tid", kApp},
                               {"length", 8192},
                               {"perms", "rw"},
                               {"tags", {kTagStream, kTagRecord, kTagModel, kTagPortIn}}});

  return {calls.begin(), calls.end()};
}

struct PreEvent {
  sys::Tid tid = 0;
  mon::TraceOp op = mon::TraceOp::Read;
  std::string target;
  json args = json::object();
  bool denied = false;
};

PreEvent ev(sys::Tid tid, mon::TraceOp op, std::string target, json args, bool denied = false) {
  if (args.is_null()) args = json::object();  // brace-init of {} yields null
  return PreEvent{tid, op, std::move(target), std::move(args), denied};
}

class Generator {
 public:
  Generator(std::uint64_t seed, SizeHints hints) : rng_(seed), hints_(hints) {}

  Scenario build(ScenarioClass av, std::uint64_t seed) {
    Scenario scenario;
    scenario.av = av;
    scenario.seed = seed;
    scenario.setup = base_setup();

    std::vector<PreEvent> benign;
    for (std::size_t i = 0; i < hints_.benign_ops; ++i) append_benign_block(benign);
    std::vector<PreEvent> attack = attack_signature(av);

    std::vector<PreEvent> merged = interleave(std::move(benign), std::move(attack));
    std::uint64_t seq = 0;
    for (PreEvent& pre : merged) {
      mon::TraceEvent event;
      event.seq = ++seq;
      event.tid = pre.tid;
      event.op = pre.op;
      event.target = std::move(pre.target);
      event.args = std::move(pre.args);
      if (pre.denied) scenario.ground_truth.insert(event.seq);
      scenario.trace.push_back(std::move(event));
    }
    return scenario;
  }

 private:
  void append_benign_block(std::vector<PreEvent>& out) {
    switch (pick_(rng_) % 11) {
      case 0:
        out.push_back(ev(kApp, mon::TraceOp::PortRead, kPort, {{"len", 32}}));
        break;
      case 1:
        out.push_back(ev(kApp, mon::TraceOp::Open, kRecordFile, {{"mode", "r"}}));
        out.push_back(ev(kApp, mon::TraceOp::Read, kRecordFile, {{"len", 128}}));
        out.push_back(ev(kApp, mon::TraceOp::Close, kRecordFile, {}));
        break;
      case 2:
        out.push_back(ev(kApp, mon::TraceOp::Read, kModelFile, {{"len", 256}}));
        break;
      case 3:
        out.push_back(ev(kApp, mon::TraceOp::Write, kLogFile, {{"len", 64}}));
        break;
      case 4:
        out.push_back(ev(kApp, mon::TraceOp::SockSend, kAppSocket, {{"len", 128}}));
        break;
      case 5:
        out.push_back(ev(kApp, mon::TraceOp::PipeWrite, kAppPipe, {{"len", 16}}));
        out.push_back(ev(kApp, mon::TraceOp::PipeRead, kAppPipe, {{"len", 16}}));
        break;
      case 6:
        out.push_back(ev(kAttacker, mon::TraceOp::Write, kScratchFile, {{"len", 8}}));
        out.push_back(ev(kAttacker, mon::TraceOp::Read, kScratchFile, {{"len", 8}}));
        break;
      case 7:
        out.push_back(ev(kAttacker, mon::TraceOp::SockSend, kEvilSocket, {{"len", 64}}));
        break;
      case 8:
        out.push_back(ev(kBystander, mon::TraceOp::Read, kNotesFile, {{"len", 32}}));
        break;
      case 9: {
        sys::Addr base = 0xA00000 + (transient_maps_++) * 0x10000;
        out.push_back(ev(kApp, mon::TraceOp::Mmap, kModelFile,
                         {{"addr", base}, {"length", 4096}, {"perms", "r"}}));
        out.push_back(
            ev(kApp, mon::TraceOp::Munmap, "mem:" + std::to_string(base), {{"addr", base}}));
        break;
      }
      case 10: {
        // In-region traffic on the app's preconfigured tainted region.
        sys::Addr addr = kAppRegionBase + 16 * (pick_(rng_) % 64);
        out.push_back(ev(kApp, mon::TraceOp::Read, "mem:" + std::to_string(addr), {{"len", 16}}));
        out.push_back(ev(kApp, mon::TraceOp::Write, "mem:" + std::to_string(addr), {{"len", 16}}));
        break;
      }
    }
  }

  std::vector<PreEvent> attack_signature(ScenarioClass av) {
    std::vector<PreEvent> out;
    switch (av) {
      case ScenarioClass::Benign:
        break;
      case ScenarioClass::AV1:
        // Plaintext sniffing of the live stream plus a compromised relay.
        for (std::size_t i = 0; i < hints_.attack_reps; ++i) {
          out.push_back(ev(kAttacker, mon::TraceOp::PortRead, kPort, {{"len", 32}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::SockRecv, kAppSocket, {{"len", 64}}, true));
          out.push_back(ev(kRelay, mon::TraceOp::SockSend, kEvilSocket, {{"len", 64}}, true));
        }
        break;
      case ScenarioClass::AV2:
        // Foreign process walks the stored data, a compromised helper
        // exfiltrates; the attacker's own send stays clean because the
        // denied reads tainted nothing.
        out.push_back(ev(kAttacker, mon::TraceOp::Open, kRecordFile, {{"mode", "r"}}, true));
        out.push_back(ev(kAttacker, mon::TraceOp::Read, kRecordFile, {{"len", 512}}, true));
        out.push_back(ev(kAttacker, mon::TraceOp::Read, kModelFile, {{"len", 512}}, true));
        out.push_back(ev(kHelper, mon::TraceOp::SockSend, kEvilSocket, {{"len", 256}}, true));
        out.push_back(ev(kAttacker, mon::TraceOp::SockSend, kEvilSocket, {{"len", 256}}, false));
        for (std::size_t i = 1; i < hints_.attack_reps; ++i) {
          out.push_back(ev(kAttacker, mon::TraceOp::Read, kRecordFile, {{"len", 512}}, true));
          out.push_back(ev(kHelper, mon::TraceOp::SockSend, kEvilSocket, {{"len", 256}}, true));
        }
        break;
      case ScenarioClass::AV3:
        // Capability escalation on exec, then access with the (denied)
        // privileges; a plain re-exec into the role is fine.
        out.push_back(ev(kAttacker, mon::TraceOp::Exec, "/usr/bin/updater",
                         {{"image", "/usr/bin/updater"},
                          {"role", "untrusted"},
                          {"grants", json::array({json::array({kTagModel, "ADD"})})}},
                         true));
        out.push_back(ev(kAttacker, mon::TraceOp::Read, kModelFile, {{"len", 64}}, true));
        out.push_back(ev(kAttacker, mon::TraceOp::Exec, "/usr/bin/updater",
                         {{"image", "/usr/bin/updater"}, {"role", "untrusted"}}, false));
        for (std::size_t i = 1; i < hints_.attack_reps; ++i) {
          out.push_back(ev(kAttacker, mon::TraceOp::Exec, "/usr/bin/updater",
                           {{"image", "/usr/bin/updater"},
                            {"role", "untrusted"},
                            {"grants", json::array({json::array({kTagRecord, "ADD"})})}},
                           true));
        }
        break;
      case ScenarioClass::AV4:
        // White-box precursor: grabbing the model file and its mapping.
        for (std::size_t i = 0; i < hints_.attack_reps; ++i) {
          sys::Addr base = 0xB00000 + i * 0x10000;
          out.push_back(ev(kAttacker, mon::TraceOp::Open, kModelFile, {{"mode", "r"}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::Read, kModelFile, {{"len", 4096}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::Mmap, kModelFile,
                           {{"addr", base}, {"length", 4096}, {"perms", "r"}}, true));
        }
        break;
      case ScenarioClass::AV5:
        // Iterated variant: repeated model/input queries plus memory probes.
        out.push_back(ev(kAttacker, mon::TraceOp::Open, kModelFile, {{"mode", "r"}}, true));
        for (std::size_t i = 0; i < hints_.attack_reps + 3; ++i) {
          out.push_back(ev(kAttacker, mon::TraceOp::Read, kModelFile, {{"len", 4096}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::Read, kRecordFile, {{"len", 512}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::Read,
                           "mem:" + std::to_string(0xDEAD000 + i * 0x1000), {{"len", 4}}, true));
        }
        break;
      case ScenarioClass::AV6:
        // Injection into the guarded input port by an unendorsed thread.
        for (std::size_t i = 0; i < hints_.attack_reps; ++i) {
          out.push_back(ev(kAttacker, mon::TraceOp::PortWrite, kPort, {{"len", 16}}, true));
          out.push_back(ev(kAttacker, mon::TraceOp::Ioctl, kPort, {{"request", 21505}}, true));
        }
        break;
    }
    return out;
  }

  std::vector<PreEvent> interleave(std::vector<PreEvent> benign, std::vector<PreEvent> attack) {
    std::vector<bool> is_attack(benign.size() + attack.size(), false);
    std::fill(is_attack.begin(), is_attack.begin() + attack.size(), true);
    std::shuffle(is_attack.begin(), is_attack.end(), rng_);
    std::vector<PreEvent> merged;
    merged.reserve(is_attack.size());
    std::size_t b = 0, a = 0;
    for (bool take_attack : is_attack) {
      merged.push_back(std::move(take_attack ? attack[a++] : benign[b++]));
    }
    return merged;
  }

  std::mt19937_64 rng_;
  SizeHints hints_;
  std::uint64_t transient_maps_ = 0;
  std::uniform_int_distribution<std::uint64_t> pick_{0, 1u << 30};
};

}  // namespace

Scenario generate_scenario(ScenarioClass av, std::uint64_t seed, SizeHints hints) {
  Generator generator(seed, hints);
  return generator.build(av, seed);
}

std::vector<Scenario> corpus(std::size_t n_per_av, std::uint64_t seed, SizeHints hints) {
  if (n_per_av < 1) raise(Errc::InvalidParams, "corpus needs n_per_av >= 1");
  std::vector<Scenario> out;
  std::uint64_t counter = 0;
  for (ScenarioClass av :
       {ScenarioClass::AV1, ScenarioClass::AV2, ScenarioClass::AV3, ScenarioClass::AV4,
        ScenarioClass::AV5, ScenarioClass::AV6, ScenarioClass::Benign}) {
    for (std::size_t i = 0; i < n_per_av; ++i) {
      out.push_back(generate_scenario(av, seed + counter, hints));
      ++counter;
    }
  }
  return out;
}

void exec_setup(sys::World& world, const std::vector<json>& setup) {
  std::map<sys::Tid, api::Session> sessions;
  auto session_for = [&](sys::Tid tid) -> api::Session& {
    auto it = sessions.find(tid);
    if (it == sessions.end()) raise(Errc::UnknownTid, "setup references unenabled tid");
    return it->second;
  };
  for (const json& call : setup) {
    const std::string kind = call.at("call").get<std::string>();
    if (kind == "enable") {
      sys::Tid tid = call.at("tid").get<sys::Tid>();
      sessions.emplace(tid, api::a_enable(world, tid));
    } else if (kind == "tag") {
      api::declare_tag(session_for(call.at("tid").get<sys::Tid>()),
                       call.at("name").get<std::string>(),
                       call.at("kind").get<std::string>() == "secrecy"
                           ? difc::TagKind::Secrecy
                           : difc::TagKind::Integrity);
    } else if (kind == "create") {
      auto object_kind = sys::object_kind_from(call.at("kind").get<std::string>());
      if (!object_kind) raise(Errc::InvalidParams, "bad object kind in setup");
      std::optional<sys::PortDirection> direction;
      if (call.contains("direction")) {
        const std::string d = call["direction"].get<std::string>();
        direction = d == "in" ? sys::PortDirection::In
                              : d == "out" ? sys::PortDirection::Out : sys::PortDirection::InOut;
      }
      api::a_create(session_for(call.at("tid").get<sys::Tid>()), *object_kind,
                    call.at("name").get<std::string>(),
                    api::LabelFlags::parse(call.at("flags").get<std::vector<std::string>>()),
                    call.at("tags").get<std::vector<std::string>>(), direction);
    } else if (kind == "add") {
      api::a_add(session_for(call.at("tid").get<sys::Tid>()), call.at("name").get<std::string>(),
                 api::LabelFlags::parse(call.at("flags").get<std::vector<std::string>>()),
                 call.at("tags").get<std::vector<std::string>>());
    } else if (kind == "grant") {
      api::grant_to(session_for(call.at("owner").get<sys::Tid>()), call.at("tid").get<sys::Tid>(),
                    call.at("tag").get<std::string>(),
                    call.at("priv").get<std::string>() == "ADD" ? difc::Privilege::Add
                                                                : difc::Privilege::Remove);
    } else if (kind == "raise") {
      api::raise_label(session_for(call.at("tid").get<sys::Tid>()),
                       call.at("tag").get<std::string>());
    } else if (kind == "lower") {
      api::lower_label(session_for(call.at("tid").get<sys::Tid>()),
                       call.at("tag").get<std::string>());
    } else if (kind == "role") {
      sys::World::RoleGrants grants;
      for (const auto& grant : call.at("grants")) {
        grants.emplace_back(grant.at(0).get<std::string>(),
                            grant.at(1).get<std::string>() == "ADD" ? difc::Privilege::Add
                                                                    : difc::Privilege::Remove);
      }
      world.define_role(call.at("name").get<std::string>(), std::move(grants));
    } else if (kind == "mmap") {
      api::a_mmap(session_for(call.at("tid").get<sys::Tid>()),
                  call.at("length").get<std::uint64_t>(),
                  sys::Perms::parse(call.at("perms").get<std::string>()),
                  call.at("tags").get<std::vector<std::string>>());
    } else {
      raise(Errc::InvalidParams, "unknown setup call '" + kind + "'");
    }
  }
}

sys::World world_for(const Scenario& scenario) {
  sys::World world;
  exec_setup(world, scenario.setup);
  return world;
}

std::string scenario_to_json(const Scenario& scenario) {
  ordered_json out;
  out["format"] = "bciflow-scenario-v1";
  out["av"] = to_string(scenario.av);
  out["seed"] = scenario.seed;
  out["setup"] = scenario.setup;
  ordered_json events = ordered_json::array();
  for (const mon::TraceEvent& event : scenario.trace) {
    events.push_back(event_to_ordered(event));
  }
  out["trace"] = std::move(events);
  out["ground_truth"] = scenario.ground_truth;
  return out.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw TraceParseError(err.byte > 0 ? err.byte - 1 : 0,
                          std::string("invalid scenario JSON: ") + err.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "bciflow-scenario-v1") {
    throw TraceParseError(0, "not a bciflow-scenario-v1 document");
  }
  Scenario scenario;
  auto av = scenario_class_from(doc.at("av").get<std::string>());
  if (!av) throw TraceParseError(0, "bad av class");
  scenario.av = *av;
  scenario.seed = doc.at("seed").get<std::uint64_t>();
  for (const json& call : doc.at("setup")) scenario.setup.push_back(call);
  for (const json& event : doc.at("trace")) {
    scenario.trace.push_back(event_from_json(event, 0));
  }
  for (const json& seq : doc.at("ground_truth")) {
    scenario.ground_truth.insert(seq.get<std::uint64_t>());
  }
  return scenario;
}

}  // namespace bciflow::trace
