#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bciflow/trace.hpp"
#include "test_support.hpp"

using namespace bciflow;
using mon::TraceEvent;
using mon::TraceOp;
using trace::Scenario;
using trace::ScenarioClass;

namespace {

std::vector<TraceEvent> random_events(std::mt19937_64& rng, std::size_t count) {
  static const std::vector<TraceOp> ops = {
      TraceOp::Open,     TraceOp::Close,    TraceOp::Read,     TraceOp::Write,
      TraceOp::Mmap,     TraceOp::Munmap,   TraceOp::Mprotect, TraceOp::Clone,
      TraceOp::Exec,     TraceOp::Ioctl,    TraceOp::SockCreate, TraceOp::SockListen,
      TraceOp::SockConnect, TraceOp::SockSend, TraceOp::SockRecv, TraceOp::PipeRead,
      TraceOp::PipeWrite, TraceOp::PortRead, TraceOp::PortWrite,
  };
  std::vector<TraceEvent> events;
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < count; ++i) {
    TraceEvent event;
    seq += 1 + rng() % 3;  // increasing, with gaps
    event.seq = seq;
    event.tid = rng() % 16;
    event.op = ops[rng() % ops.size()];
    event.target = "/obj/" + std::to_string(rng() % 64);
    event.args = nlohmann::json::object();
    if (rng() % 2) event.args["len"] = rng() % 8192;
    if (rng() % 3 == 0) event.args["mode"] = (rng() % 2) ? "r" : "rw";
    if (rng() % 5 == 0) event.args["image"] = "/bin/tool";
    events.push_back(std::move(event));
  }
  return events;
}

}  // namespace

TEST_CASE("serialize then parse is the identity on random traces") {
  std::mt19937_64 rng(2026);
  std::vector<TraceEvent> events = random_events(rng, 1000);
  std::string bytes = trace::serialize_trace(events);
  std::vector<TraceEvent> parsed = trace::parse_trace(bytes);
  REQUIRE(parsed.size() == events.size());
  CHECK(parsed == events);

  SUBCASE("parse then serialize is canonical (idempotent)") {
    CHECK(trace::serialize_trace(parsed) == bytes);
  }
}

TEST_CASE("parse canonicalizes field order") {
  const std::string shuffled =
      R"({"target":"/f","op":"read","args":{"len":4},"tid":3,"seq":1})" "\n";
  std::vector<TraceEvent> events = trace::parse_trace(shuffled);
  REQUIRE(events.size() == 1);
  std::string canonical = trace::serialize_trace(events);
  CHECK(canonical == R"({"seq":1,"tid":3,"op":"read","target":"/f","args":{"len":4}})" "\n");
}

TEST_CASE("parse errors carry the byte offset") {
  const std::string good_line = R"({"seq":1,"tid":1,"op":"read","target":"/f","args":{}})";

  SUBCASE("unknown op is named") {
    std::string text = good_line + "\n" +
                       R"({"seq":2,"tid":1,"op":"teleport","target":"/f","args":{}})" "\n";
    try {
      trace::parse_trace(text);
      FAIL("expected a parse error");
    } catch (const trace::TraceParseError& err) {
      CHECK(err.byte_offset() == good_line.size() + 1);
      CHECK(std::string(err.what()).find("teleport") != std::string::npos);
    }
  }
  SUBCASE("duplicate seq is rejected") {
    std::string text = good_line + "\n" + good_line + "\n";
    try {
      trace::parse_trace(text);
      FAIL("expected a parse error");
    } catch (const trace::TraceParseError& err) {
      CHECK(err.byte_offset() == good_line.size() + 1);
      CHECK(std::string(err.what()).find("duplicate") != std::string::npos);
    }
  }
  SUBCASE("unknown extra fields are rejected") {
    std::string text =
        R"({"seq":1,"tid":1,"op":"read","target":"/f","args":{},"color":"red"})" "\n";
    CHECK_THROWS_AS(trace::parse_trace(text), trace::TraceParseError);
  }
  SUBCASE("invalid JSON reports a position inside the offending line") {
    std::string text = good_line + "\n" + "{\"seq\": 2, \"tid\": }" + "\n";
    try {
      trace::parse_trace(text);
      FAIL("expected a parse error");
    } catch (const trace::TraceParseError& err) {
      CHECK(err.byte_offset() >= good_line.size() + 1);
      CHECK(err.byte_offset() < text.size());
    }
  }
  SUBCASE("missing required fields") {
    CHECK_THROWS_AS(trace::parse_trace(R"({"seq":1,"tid":1,"op":"read"})" "\n"),
                    trace::TraceParseError);
    CHECK_THROWS_AS(trace::parse_trace(R"({"tid":1,"op":"read","target":""})" "\n"),
                    trace::TraceParseError);
  }
  SUBCASE("events need not carry args") {
    auto events = trace::parse_trace(R"({"seq":1,"tid":1,"op":"close","target":"/f"})" "\n");
    REQUIRE(events.size() == 1);
    CHECK(events[0].args.is_object());
    CHECK(events[0].args.empty());
  }
}

TEST_CASE("scenario generation is deterministic in (av, seed)") {
  for (ScenarioClass av : {ScenarioClass::Benign, ScenarioClass::AV1, ScenarioClass::AV4}) {
    Scenario a = trace::generate_scenario(av, 5);
    Scenario b = trace::generate_scenario(av, 5);
    CHECK(trace::scenario_to_json(a) == trace::scenario_to_json(b));
    Scenario c = trace::generate_scenario(av, 6);
    CHECK(trace::scenario_to_json(a) != trace::scenario_to_json(c));
  }
}

TEST_CASE("benign scenarios have no seeded violations") {
  Scenario scenario = trace::generate_scenario(ScenarioClass::Benign, 11);
  CHECK(scenario.ground_truth.empty());
  CHECK(!scenario.trace.empty());
}

TEST_CASE("AV2 scenarios read the stored record file from a foreign tid") {
  Scenario scenario = trace::generate_scenario(ScenarioClass::AV2, 1);
  bool found = false;
  for (const TraceEvent& event : scenario.trace) {
    if (event.op == TraceOp::Read && event.target == "/data/eegIDRecord.csv" && event.tid == 2) {
      found = true;
      CHECK(scenario.ground_truth.contains(event.seq));
    }
  }
  CHECK(found);
}

TEST_CASE("ground truth matches the replay exactly for every class") {
  for (ScenarioClass av :
       {ScenarioClass::Benign, ScenarioClass::AV1, ScenarioClass::AV2, ScenarioClass::AV3,
        ScenarioClass::AV4, ScenarioClass::AV5, ScenarioClass::AV6}) {
    for (std::uint64_t seed : {1ull, 99ull}) {
      CAPTURE(trace::to_string(av));
      CAPTURE(seed);
      Scenario scenario = trace::generate_scenario(av, seed);
      sys::World world = trace::world_for(scenario);
      mon::ReplaySummary summary = mon::replay(world, scenario.trace);
      REQUIRE(!summary.abort.has_value());
      std::set<std::uint64_t> reported;
      for (const auto& report : summary.reports) reported.insert(report.seq);
      CHECK(reported == scenario.ground_truth);
    }
  }
}

TEST_CASE("deleting the seeded violations leaves a clean trace (benign closure)") {
  for (ScenarioClass av : {ScenarioClass::AV1, ScenarioClass::AV2, ScenarioClass::AV3,
                           ScenarioClass::AV4, ScenarioClass::AV5, ScenarioClass::AV6}) {
    CAPTURE(trace::to_string(av));
    Scenario scenario = trace::generate_scenario(av, 3);
    std::vector<TraceEvent> cleaned;
    for (const TraceEvent& event : scenario.trace) {
      if (!scenario.ground_truth.contains(event.seq)) cleaned.push_back(event);
    }
    sys::World world = trace::world_for(scenario);
    mon::ReplaySummary summary = mon::replay(world, cleaned);
    REQUIRE(!summary.abort.has_value());
    CHECK(summary.reports.empty());
  }
}

TEST_CASE("corpus produces seven classes times n with distinct seeds") {
  std::vector<Scenario> scenarios = trace::corpus(3, 1000);
  CHECK(scenarios.size() == 21);
  std::set<std::uint64_t> seeds;
  for (const Scenario& scenario : scenarios) seeds.insert(scenario.seed);
  CHECK(seeds.size() == 21);

  std::vector<Scenario> again = trace::corpus(3, 1000);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    CHECK(trace::scenario_to_json(scenarios[i]) == trace::scenario_to_json(again[i]));
  }
  CHECK(test::thrown_code([&] { trace::corpus(0, 1); }) == Errc::InvalidParams);
}

TEST_CASE("scenario files round-trip") {
  Scenario scenario = trace::generate_scenario(ScenarioClass::AV6, 21);
  std::string text = trace::scenario_to_json(scenario);
  Scenario loaded = trace::scenario_from_json(text);
  CHECK(loaded.av == scenario.av);
  CHECK(loaded.seed == scenario.seed);
  CHECK(loaded.trace == scenario.trace);
  CHECK(loaded.ground_truth == scenario.ground_truth);
  CHECK(trace::scenario_to_json(loaded) == text);

  CHECK_THROWS_AS(trace::scenario_from_json("{\"format\":\"other\"}"),
                  trace::TraceParseError);
}
