#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bciflow/cli.hpp"
#include "bciflow/monitor.hpp"
#include "bciflow/trace.hpp"
#include "test_support.hpp"

using namespace bciflow;
using mon::AvClass;
using mon::Decision;
using mon::TraceEvent;
using mon::TraceOp;
using sys::ObjectKind;
using sys::World;
using test::thrown_code;

namespace {

TraceEvent make_event(std::uint64_t seq, sys::Tid tid, TraceOp op, std::string target,
                      nlohmann::json args = nlohmann::json::object()) {
  TraceEvent event;
  event.seq = seq;
  event.tid = tid;
  event.op = op;
  event.target = std::move(target);
  event.args = args.is_null() ? nlohmann::json::object() : std::move(args);
  return event;
}

// A small hand-built world: a labeled app thread, an unlabeled foreign
// thread, and the usual objects.
struct Fixture {
  World world;
  difc::TagId delta;
  difc::TagId model;
  difc::TagId guard;

  Fixture() {
    delta = world.tag_named("delta_stream", difc::TagKind::Secrecy).id;
    model = world.tag_named("model_weights", difc::TagKind::Secrecy).id;
    guard = world.tag_named("port_input", difc::TagKind::Integrity).id;

    auto& app = world.create_thread(1, 1);
    app.label.secrecy = {delta, model};
    app.label.integrity = {guard};
    world.create_thread(2, 2);  // foreign, unlabeled

    difc::Label stream;
    stream.secrecy = {delta};
    stream.integrity = {guard};
    world.create_object(ObjectKind::File, "/data/stream.csv", stream, 1);

    difc::Label model_label;
    model_label.secrecy = {model};
    model_label.integrity = {guard};
    world.create_object(ObjectKind::File, "/opt/model.bin", model_label, 1);

    difc::Label full = stream;
    full.secrecy.insert(model);
    world.create_object(ObjectKind::Socket, "sock:app", full, 1);
    world.create_object(ObjectKind::Socket, "sock:evil", std::nullopt, 2);

    difc::Label port_label;
    port_label.secrecy = {delta};
    port_label.integrity = {guard};
    world.create_object(ObjectKind::Port, "/dev/ttyUSB0", port_label, 1,
                        sys::PortDirection::In);
  }
};

}  // namespace

TEST_CASE("reads within equal labels are allowed") {
  Fixture f;
  auto decision = mon::on_event(f.world, make_event(1, 1, TraceOp::Read, "/data/stream.csv",
                                                    {{"len", 16}}));
  CHECK(decision.allowed);
}

TEST_CASE("a tagged thread sending on an unlabeled socket is a secrecy leak") {
  Fixture f;
  auto decision =
      mon::on_event(f.world, make_event(1, 1, TraceOp::SockSend, "sock:evil", {{"len", 64}}));
  REQUIRE(!decision.allowed);
  CHECK(decision.report->rule == difc::Rule::SecrecyLeak);
  // Stream data relayed out through a socket write: classified as sniffing/MITM.
  CHECK(decision.report->av_class == AvClass::AV1);
}

TEST_CASE("an unlabeled thread writing a guarded port is an injection") {
  Fixture f;
  auto decision =
      mon::on_event(f.world, make_event(1, 2, TraceOp::PortWrite, "/dev/ttyUSB0", {{"len", 8}}));
  REQUIRE(!decision.allowed);
  CHECK(decision.report->rule == difc::Rule::UnauthorizedPortInjection);
  CHECK(decision.report->av_class == AvClass::AV6);
}

TEST_CASE("classification follows the detection table") {
  Fixture f;
  SUBCASE("sniffing the app socket") {
    auto decision =
        mon::on_event(f.world, make_event(1, 2, TraceOp::SockRecv, "sock:app", {{"len", 8}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->av_class == AvClass::AV1);
  }
  SUBCASE("foreign read of the model file is the white-box precursor") {
    auto decision =
        mon::on_event(f.world, make_event(1, 2, TraceOp::Read, "/opt/model.bin", {{"len", 8}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::SecrecyLeak);
    CHECK(decision.report->av_class == AvClass::AV4);
  }
  SUBCASE("foreign read of a plain labeled file is inadequate access control") {
    auto decision = mon::on_event(
        f.world, make_event(1, 2, TraceOp::Read, "/data/stream.csv", {{"len", 8}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->av_class == AvClass::AV2);
  }
  SUBCASE("exec escalation is AV3") {
    f.world.define_role("untrusted", {});
    auto decision = mon::on_event(
        f.world,
        make_event(1, 2, TraceOp::Exec, "/bin/x",
                   {{"image", "/bin/x"},
                    {"role", "untrusted"},
                    {"grants", nlohmann::json::array(
                                   {nlohmann::json::array({"model_weights", "ADD"})})}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::CapabilityDenied);
    CHECK(decision.report->av_class == AvClass::AV3);
  }
  SUBCASE("unmapped access stays unclassified") {
    auto decision =
        mon::on_event(f.world, make_event(1, 2, TraceOp::Read, "mem:4096", {{"len", 4}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::UnmappedAccess);
    CHECK(!decision.report->av_class.has_value());
    CHECK(mon::classify_av(*decision.report, f.world) == std::nullopt);
  }
}

TEST_CASE("exec swaps capabilities for the role and labels persist") {
  Fixture f;
  f.world.define_role("bci_app", {{"model_weights", difc::Privilege::Add}});
  difc::Label before = f.world.find_thread(2)->label;
  auto decision = mon::on_event(
      f.world,
      make_event(1, 2, TraceOp::Exec, "/bin/app", {{"image", "/bin/app"}, {"role", "bci_app"}}));
  CHECK(decision.allowed);
  const sys::ThreadContext& thread = *f.world.find_thread(2);
  CHECK(thread.caps.holds(f.model, difc::Privilege::Add));
  CHECK(thread.label == before);
}

TEST_CASE("clone copies the parent's labels and capabilities") {
  Fixture f;
  f.world.find_thread(1)->caps.grant(f.delta, difc::Privilege::Add);
  auto decision = mon::on_event(f.world, make_event(1, 1, TraceOp::Clone, "", {{"child", 7}}));
  CHECK(decision.allowed);
  const sys::ThreadContext* child = f.world.find_thread(7);
  REQUIRE(child != nullptr);
  CHECK(child->label == f.world.find_thread(1)->label);
  CHECK(child->caps == f.world.find_thread(1)->caps);
  CHECK(child->process == f.world.find_thread(1)->process);
}

TEST_CASE("memory access is checked against the owning thread's regions") {
  Fixture f;
  difc::Label label;
  label.secrecy = {f.model};
  label.integrity = {f.guard};  // the app thread carries guard, so reads chain
  f.world.map_region(1, 0x8000, 0x1000, sys::Perms{true, true, false}, label);

  SUBCASE("in-region labeled read by the right thread") {
    auto decision =
        mon::on_event(f.world, make_event(1, 1, TraceOp::Read, "mem:32768", {{"len", 4}}));
    CHECK(decision.allowed);
  }
  SUBCASE("write after munmap is an unmapped access") {
    auto ok = mon::on_event(f.world, make_event(1, 1, TraceOp::Munmap, "mem:32768",
                                                {{"addr", 0x8000}}));
    CHECK(ok.allowed);
    auto decision =
        mon::on_event(f.world, make_event(2, 1, TraceOp::Write, "mem:32768", {{"len", 4}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::UnmappedAccess);
  }
  SUBCASE("missing write permission denies") {
    auto ok = mon::on_event(f.world, make_event(1, 1, TraceOp::Mprotect, "mem:32768",
                                                {{"addr", 0x8000}, {"perms", "r"}}));
    CHECK(ok.allowed);
    auto decision =
        mon::on_event(f.world, make_event(2, 1, TraceOp::Write, "mem:32768", {{"len", 4}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::UnmappedAccess);
  }
  SUBCASE("a foreign thread has no mapping at that address") {
    auto decision =
        mon::on_event(f.world, make_event(1, 2, TraceOp::Read, "mem:32768", {{"len", 4}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->rule == difc::Rule::UnmappedAccess);
  }
}

TEST_CASE("mmap of a labeled file checks the read flow and labels the region") {
  Fixture f;
  SUBCASE("the app may map the model file") {
    auto decision = mon::on_event(f.world, make_event(1, 1, TraceOp::Mmap, "/opt/model.bin",
                                                      {{"addr", 0x20000}, {"length", 4096}}));
    CHECK(decision.allowed);
    const auto* region = f.world.region_lookup(*f.world.find_thread(1), 0x20000);
    REQUIRE(region != nullptr);
    CHECK(region->label.secrecy.contains(f.model));
  }
  SUBCASE("a foreign thread may not") {
    auto decision = mon::on_event(f.world, make_event(1, 2, TraceOp::Mmap, "/opt/model.bin",
                                                      {{"addr", 0x20000}, {"length", 4096}}));
    REQUIRE(!decision.allowed);
    CHECK(decision.report->av_class == AvClass::AV4);
    CHECK(f.world.region_lookup(*f.world.find_thread(2), 0x20000) == nullptr);
  }
}

TEST_CASE("denied events leave the observable world untouched") {
  Fixture f;
  World snapshot = f.world;
  std::vector<TraceEvent> denied_events = {
      make_event(1, 2, TraceOp::Read, "/opt/model.bin", {{"len", 8}}),
      make_event(2, 2, TraceOp::PortWrite, "/dev/ttyUSB0", {{"len", 8}}),
      make_event(3, 1, TraceOp::SockSend, "sock:evil", {{"len", 8}}),
      make_event(4, 2, TraceOp::Write, "mem:4096", {{"len", 8}}),
  };
  for (const TraceEvent& event : denied_events) {
    auto decision = mon::on_event(f.world, event);
    CHECK(!decision.allowed);
    CHECK(f.world == snapshot);
  }
}

TEST_CASE("malformed events are errors, not decisions") {
  Fixture f;
  CHECK(thrown_code([&] {
          mon::on_event(f.world, make_event(1, 99, TraceOp::Read, "/data/stream.csv", {}));
        }) == Errc::MalformedEvent);
  CHECK(thrown_code([&] {
          mon::on_event(f.world, make_event(1, 1, TraceOp::Read, "/no/such/file", {}));
        }) == Errc::MalformedEvent);
  CHECK(thrown_code([&] {
          mon::on_event(f.world, make_event(1, 1, TraceOp::SockSend, "/data/stream.csv", {}));
        }) == Errc::MalformedEvent);  // kind mismatch
  CHECK(thrown_code([&] {
          mon::on_event(f.world, make_event(1, 1, TraceOp::Mmap, "/data/stream.csv", {}));
        }) == Errc::MalformedEvent);  // missing length
  CHECK(thrown_code([&] {
          mon::on_event(f.world, make_event(1, 1, TraceOp::Open, "/data/stream.csv",
                                            {{"mode", "q"}}));
        }) == Errc::MalformedEvent);
}

TEST_CASE("replay rejects out-of-order sequence numbers with a partial summary") {
  Fixture f;
  std::vector<TraceEvent> events = {
      make_event(5, 1, TraceOp::Read, "/data/stream.csv", {{"len", 4}}),
      make_event(4, 1, TraceOp::Read, "/data/stream.csv", {{"len", 4}}),
      make_event(6, 1, TraceOp::Read, "/data/stream.csv", {{"len", 4}}),
  };
  auto summary = mon::replay(f.world, events);
  REQUIRE(summary.abort.has_value());
  CHECK(summary.abort->index == 1);
  CHECK(summary.processed == 1);
}

TEST_CASE("replay of an empty trace is empty") {
  Fixture f;
  auto summary = mon::replay(f.world, {});
  CHECK(summary.processed == 0);
  CHECK(summary.reports.empty());
  CHECK(!summary.abort.has_value());
}

TEST_CASE("open registers a handle and close drops it") {
  Fixture f;
  auto open = mon::on_event(f.world, make_event(1, 1, TraceOp::Open, "/data/stream.csv",
                                                {{"mode", "r"}}));
  CHECK(open.allowed);
  sys::Oid oid = f.world.find_object_by_name("/data/stream.csv")->oid;
  CHECK(f.world.find_thread(1)->handles.contains(oid));
  auto close = mon::on_event(f.world, make_event(2, 1, TraceOp::Close, "/data/stream.csv", {}));
  CHECK(close.allowed);
  CHECK(!f.world.find_thread(1)->handles.contains(oid));
  // Closing again stays a no-op.
  CHECK(mon::on_event(f.world, make_event(3, 1, TraceOp::Close, "/data/stream.csv", {})).allowed);
}

TEST_CASE("denied reads do not taint; floating mode propagates on success") {
  sys::WorldOptions options;
  options.floating_labels = true;
  World world{options};
  difc::TagId delta = world.tag_named("delta", difc::TagKind::Secrecy).id;
  world.create_thread(1, 1);
  difc::Label label;
  label.secrecy = {delta};
  world.create_object(ObjectKind::File, "/secret", label, 1);
  world.create_object(ObjectKind::Socket, "sock:out", std::nullopt, 1);

  // Successful read floats the tag into the reader's label.
  CHECK(mon::on_event(world, make_event(1, 1, TraceOp::Read, "/secret", {{"len", 4}})).allowed);
  CHECK(world.find_thread(1)->label.secrecy.contains(delta));
  // Which now blocks the outbound send.
  auto leak = mon::on_event(world, make_event(2, 1, TraceOp::SockSend, "sock:out", {{"len", 4}}));
  CHECK(!leak.allowed);
}

TEST_CASE("replay determinism: equal worlds and traces give byte-identical reports") {
  trace::Scenario scenario = trace::generate_scenario(trace::ScenarioClass::AV2, 42);
  World w1 = trace::world_for(scenario);
  World w2 = trace::world_for(scenario);
  auto s1 = mon::replay(w1, scenario.trace);
  auto s2 = mon::replay(w2, scenario.trace);
  CHECK(cli::report_json(s1) == cli::report_json(s2));
  CHECK(w1 == w2);
}
