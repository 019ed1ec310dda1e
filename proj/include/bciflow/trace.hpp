#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bciflow/api.hpp"
#include "bciflow/monitor.hpp"

namespace bciflow::trace {

/// Parse failure carrying the absolute byte offset of the offending input.
class TraceParseError : public Error {
 public:
  TraceParseError(std::size_t byte_offset, const std::string& what)
      : Error(Errc::ParseError, "at byte " + std::to_string(byte_offset) + ": " + what),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Wire format: UTF-8, one JSON object per line with exactly the fields
/// seq/tid/op/target/args (args may be omitted and defaults to {}).
/// Unknown fields, unknown ops and duplicate seqs are rejected.
std::vector<mon::TraceEvent> parse_trace(const std::string& bytes);

/// Canonical form: stable field order, args keys sorted, one event per line.
std::string serialize_trace(const std::vector<mon::TraceEvent>& events);

enum class ScenarioClass { Benign, AV1, AV2, AV3, AV4, AV5, AV6 };

const char* to_string(ScenarioClass av);
std::optional<ScenarioClass> scenario_class_from(const std::string& name);

/// A self-contained replayable case: the API calls that configure the world,
/// the event trace, and the exact seqs the monitor must deny.
struct Scenario {
  ScenarioClass av = ScenarioClass::Benign;
  std::uint64_t seed = 0;
  std::vector<nlohmann::json> setup;
  std::vector<mon::TraceEvent> trace;
  std::set<std::uint64_t> ground_truth;
};

struct SizeHints {
  std::size_t benign_ops = 40;  // number of benign vocabulary blocks
  std::size_t attack_reps = 3;  // repetitions of the attack signature
};

/// Deterministic in (av, seed): interleaves benign workload with the attack
/// vector's signature pattern and records exactly the seqs that must be
/// denied. Benign scenarios have an empty ground truth.
Scenario generate_scenario(ScenarioClass av, std::uint64_t seed, SizeHints hints = {});

/// n scenarios per attack vector plus n benign ones, seeds derived from
/// `seed` by counter.
std::vector<Scenario> corpus(std::size_t n_per_av, std::uint64_t seed, SizeHints hints = {});

/// Runs the scenario's setup calls against a fresh world (tid 1000 acts as
/// the policy-authority session; it stays resident).
sys::World world_for(const Scenario& scenario);

/// Applies setup calls to an existing world.
void exec_setup(sys::World& world, const std::vector<nlohmann::json>& setup);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

}  // namespace bciflow::trace
