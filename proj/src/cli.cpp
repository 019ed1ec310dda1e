#include "bciflow/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bciflow/api.hpp"
#include "bciflow/attacks.hpp"
#include "bciflow/defenses.hpp"
#include "bciflow/trace.hpp"

namespace bciflow::cli {

namespace {

using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::ParseError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::ParseError, "cannot write '" + path + "'");
  out << content;
}

ordered_json report_to_json(const mon::ReplaySummary& summary) {
  ordered_json doc;
  ordered_json counts;
  counts["processed"] = summary.processed;
  counts["allowed"] = summary.allowed;
  counts["denied"] = summary.denied;
  counts["by_rule"] = summary.denied_by_rule;
  counts["by_av"] = summary.denied_by_av;
  doc["summary"] = std::move(counts);
  ordered_json violations = ordered_json::array();
  for (const mon::ViolationReport& report : summary.reports) {
    ordered_json entry;
    entry["seq"] = report.seq;
    entry["rule"] = difc::to_string(report.rule);
    entry["subject"] = report.subject;
    entry["object"] = report.object;
    entry["op"] = mon::to_string(report.op);
    entry["violating"] = report.violating;
    entry["av"] = report.av_class ? ordered_json(mon::to_string(*report.av_class))
                                  : ordered_json(nullptr);
    entry["note"] = report.note;
    violations.push_back(std::move(entry));
  }
  doc["violations"] = std::move(violations);
  if (summary.abort) {
    doc["abort"] = ordered_json{{"index", summary.abort->index},
                                {"message", summary.abort->message}};
  }
  return doc;
}

void print_human_summary(const mon::ReplaySummary& summary) {
  std::cout << "events: " << summary.processed << "  allowed: " << summary.allowed
            << "  denied: " << summary.denied << "\n";
  if (!summary.reports.empty()) {
    std::cout << "  seq  rule                        av    subject  note\n";
    for (const mon::ViolationReport& report : summary.reports) {
      std::printf("  %-4llu %-27s %-5s %-8llu %s\n",
                  static_cast<unsigned long long>(report.seq), difc::to_string(report.rule),
                  report.av_class ? mon::to_string(*report.av_class) : "-",
                  static_cast<unsigned long long>(report.subject), report.note.c_str());
    }
  }
  if (summary.abort) {
    std::cout << "replay aborted at trace index " << summary.abort->index << ": "
              << summary.abort->message << "\n";
  }
}

sys::ObjectKind implicit_kind_for(mon::TraceOp op) {
  switch (op) {
    case mon::TraceOp::SockCreate:
    case mon::TraceOp::SockListen:
    case mon::TraceOp::SockConnect:
    case mon::TraceOp::SockSend:
    case mon::TraceOp::SockRecv:
      return sys::ObjectKind::Socket;
    case mon::TraceOp::PipeRead:
    case mon::TraceOp::PipeWrite:
      return sys::ObjectKind::Pipe;
    case mon::TraceOp::PortRead:
    case mon::TraceOp::PortWrite:
    case mon::TraceOp::Ioctl:
      return sys::ObjectKind::Port;
    default:
      return sys::ObjectKind::File;
  }
}

bool target_is_name(const mon::TraceEvent& event) {
  switch (event.op) {
    case mon::TraceOp::Clone:
    case mon::TraceOp::Exec:
    case mon::TraceOp::Munmap:
    case mon::TraceOp::Mprotect:
      return false;
    default:
      return !event.target.empty() && !event.target.starts_with("mem:");
  }
}

/// Raw-trace replay: objects and threads materialize unlabeled on first
/// reference; policy taint entries label matching objects at creation time.
mon::ReplaySummary replay_raw_trace(const std::vector<mon::TraceEvent>& events,
                                    const api::PolicyConfig* policy) {
  sys::World world;
  constexpr sys::Tid kPolicyTid = 1'000'000;
  std::optional<api::Session> authority;
  if (policy) {
    authority = api::a_enable(world, kPolicyTid);
    for (const auto& [role, grants] : policy->roles) {
      world.define_role(role, grants);
    }
  }
  for (const mon::TraceEvent& event : events) {
    if (!world.find_thread(event.tid)) {
      world.create_thread(event.tid, event.tid);
    }
    if (event.op == mon::TraceOp::Clone) continue;  // child created by the monitor
    if (target_is_name(event) && !world.find_object_by_name(event.target) &&
        event.op != mon::TraceOp::SockCreate) {
      sys::ObjectKind kind = implicit_kind_for(event.op);
      world.create_object(kind, event.target, std::nullopt, event.tid);
      if (policy && authority) {
        for (const auto& entry : policy->taint) {
          if (entry.kind == kind && api::glob_match(entry.pattern, event.target)) {
            api::a_add(*authority, event.target, entry.flags, entry.tags);
          }
        }
      }
    }
  }
  // Rebuild cleanly: the pass above materialized the world; replay on it.
  return mon::replay(world, events);
}

int cmd_replay(const std::string& input, const std::string& policy_path,
               const std::string& report_path) {
  mon::ReplaySummary summary;
  std::string bytes = read_file(input);
  if (input.ends_with(".scenario.json") ||
      (!bytes.empty() && bytes.find("bciflow-scenario-v1") != std::string::npos &&
       bytes[0] == '{')) {
    trace::Scenario scenario = trace::scenario_from_json(bytes);
    sys::World world = trace::world_for(scenario);
    summary = mon::replay(world, scenario.trace);
  } else {
    std::vector<mon::TraceEvent> events = trace::parse_trace(bytes);
    std::optional<api::PolicyConfig> policy;
    if (!policy_path.empty()) {
      policy = api::parse_policy(read_file(policy_path));
    }
    summary = replay_raw_trace(events, policy ? &*policy : nullptr);
  }
  if (!report_path.empty()) {
    write_file(report_path, report_json(summary));
  }
  print_human_summary(summary);
  if (summary.abort) {
    std::cerr << "error: " << summary.abort->message << "\n";
    return 1;
  }
  return summary.reports.empty() ? 0 : 2;
}

int cmd_gen(const std::string& av_name, std::uint64_t seed, std::string out_path) {
  auto av = trace::scenario_class_from(av_name);
  if (!av) {
    std::cerr << "error: unknown attack vector '" << av_name << "'\n";
    return 1;
  }
  trace::Scenario scenario = trace::generate_scenario(*av, seed);
  if (out_path.empty()) {
    out_path = av_name + "-" + std::to_string(seed) + ".scenario.json";
  }
  if (out_path.ends_with(".trace.jsonl")) {
    write_file(out_path, trace::serialize_trace(scenario.trace));
  } else {
    write_file(out_path, trace::scenario_to_json(scenario));
  }
  std::cout << "wrote " << out_path << " (" << scenario.trace.size() << " events, "
            << scenario.ground_truth.size() << " seeded violations)\n";
  return 0;
}

int cmd_corpus(std::size_t n, std::uint64_t seed, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<trace::Scenario> scenarios = trace::corpus(n, seed);
  for (const trace::Scenario& scenario : scenarios) {
    std::string name = std::string(trace::to_string(scenario.av)) + "-" +
                       std::to_string(scenario.seed) + ".scenario.json";
    write_file((std::filesystem::path(dir) / name).string(),
               trace::scenario_to_json(scenario));
  }
  std::cout << "wrote " << scenarios.size() << " scenarios to " << dir << "\n";
  return 0;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream in(csv);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    grid.push_back(std::stod(cell));
  }
  if (grid.empty()) raise(Errc::InvalidParams, "empty grid");
  return grid;
}

int cmd_attack(const std::string& kind_name, const std::string& grid_csv, std::uint64_t seed,
               const std::string& out_path, int iterations, std::size_t samples) {
  auto kind = sig::attack_kind_from(kind_name);
  if (!kind) {
    std::cerr << "error: unknown attack kind '" << kind_name << "'\n";
    return 1;
  }
  sig::ToyProblem problem = sig::train_toy(seed, samples);
  sig::AttackSpec spec;
  spec.kind = *kind;
  spec.iterations = iterations;
  spec.seed = seed;
  sig::AccuracyTable table =
      sig::evaluate_under_attack(problem.net, problem.test, spec, parse_grid(grid_csv));
  std::string csv = table.to_csv();
  if (!out_path.empty()) {
    write_file(out_path, csv);
  }
  std::cout << csv;
  return 0;
}

/// Attack spec strings look like "fgsm:0.05", "pgd:0.5,n=40", "delay:16".
sig::AttackSpec parse_attack_spec(const std::string& text, std::uint64_t seed) {
  std::size_t colon = text.find(':');
  std::string kind_name = text.substr(0, colon);
  auto kind = sig::attack_kind_from(kind_name);
  if (!kind) raise(Errc::InvalidParams, "unknown attack kind '" + kind_name + "'");
  sig::AttackSpec spec;
  spec.kind = *kind;
  spec.seed = seed;
  if (colon != std::string::npos) {
    std::stringstream in(text.substr(colon + 1));
    std::string cell;
    bool first = true;
    while (std::getline(in, cell, ',')) {
      if (first) {
        if (spec.kind == sig::AttackKind::Delay) {
          spec.tau = static_cast<Eigen::Index>(std::stoll(cell));
        } else {
          spec.epsilon = std::stod(cell);
        }
        first = false;
      } else if (cell.starts_with("n=")) {
        spec.iterations = std::stoi(cell.substr(2));
      } else if (cell.starts_with("alpha=")) {
        spec.alpha = std::stod(cell.substr(6));
      } else if (cell.starts_with("eps1=")) {
        spec.epsilon1 = std::stod(cell.substr(5));
      } else {
        raise(Errc::InvalidParams, "bad attack spec token '" + cell + "'");
      }
    }
  }
  return spec;
}

int cmd_defend(const std::string& filter_name, const std::string& attack_text,
               const std::string& out_path, int window, int order, double sigma,
               std::uint64_t seed, std::size_t samples) {
  auto kind = sig::defense_kind_from(filter_name);
  if (!kind) {
    std::cerr << "error: unknown filter '" << filter_name << "'\n";
    return 1;
  }
  sig::ToyProblem problem = sig::train_toy(seed, samples);
  sig::AttackSpec attack = parse_attack_spec(attack_text, seed);
  sig::DefenseSpec defense;
  defense.kind = *kind;
  defense.window = window;
  defense.order = order;
  defense.sigma = sigma;
  defense.seed = seed + 1;
  sig::DefenseOutcome outcome = sig::evaluate_defense(problem.net, problem.test, attack, defense);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "attacked,defended\n%.6f,%.6f\n", outcome.attacked,
                outcome.defended);
  if (!out_path.empty()) write_file(out_path, buf);
  std::cout << buf;
  return 0;
}

int cmd_bench(const std::string& op, std::uint64_t iters) {
  using Clock = std::chrono::steady_clock;
  auto start = Clock::now();
  if (op == "a_enable") {
    for (std::uint64_t i = 0; i < iters; ++i) {
      sys::World world;
      api::Session session = api::a_enable(world, 1);
      api::a_cleanup(session);
    }
  } else if (op == "a_add") {
    sys::World world;
    api::Session session = api::a_enable(world, 1);
    api::a_create(session, sys::ObjectKind::File, "/bench/file", {}, {});
    api::LabelFlags flags{true, false};
    for (std::uint64_t i = 0; i < iters; ++i) {
      sys::Oid oid = api::a_add(session, "/bench/file", flags, {"bench_tag"});
      api::a_remove(session, oid);
    }
  } else if (op == "flow_check") {
    difc::LabelRegistry registry;
    difc::Label subject, object;
    subject.secrecy.insert(registry.create_tag(difc::TagKind::Secrecy).id);
    object.secrecy = subject.secrecy;
    volatile bool sink = false;
    for (std::uint64_t i = 0; i < iters; ++i) {
      sink = difc::check_flow_allowed(registry, subject, object, difc::Direction::Read).allowed;
    }
    (void)sink;
  } else {
    std::cerr << "error: unknown bench op '" << op << "'\n";
    return 1;
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  double per_op = static_cast<double>(elapsed.count()) / static_cast<double>(iters);
  // Reported, never asserted: latency is hardware-bound.
  std::printf("%s: %llu iterations, %.1f ns/op\n", op.c_str(),
              static_cast<unsigned long long>(iters), per_op);
  return 0;
}

}  // namespace

std::string report_json(const mon::ReplaySummary& summary) {
  return report_to_json(summary).dump(2) + "\n";
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"information-flow tracing and adversarial-signal lab for BCI workloads"};
  app.require_subcommand(1);

  std::string input, policy_path, report_path;
  auto* replay_cmd = app.add_subcommand("replay", "replay a trace or scenario file");
  replay_cmd->add_option("input", input, "trace (.trace.jsonl) or scenario (.scenario.json)")
      ->required();
  replay_cmd->add_option("--policy", policy_path, "policy config JSON for raw traces");
  replay_cmd->add_option("--report", report_path, "write the JSON report here");

  std::string av_name = "benign";
  std::uint64_t seed = 1;
  std::string out_path;
  auto* gen_cmd = app.add_subcommand("gen", "generate one scenario");
  gen_cmd->add_option("--av", av_name, "AV1..AV6 or benign")->required();
  gen_cmd->add_option("--seed", seed, "generator seed")->required();
  gen_cmd->add_option("--out", out_path, "output path (.scenario.json or .trace.jsonl)");

  std::size_t corpus_n = 1;
  std::string corpus_dir;
  auto* corpus_cmd = app.add_subcommand("corpus", "generate a scenario corpus");
  corpus_cmd->add_option("--n", corpus_n, "scenarios per class")->required();
  corpus_cmd->add_option("--seed", seed, "base seed")->required();
  corpus_cmd->add_option("--dir", corpus_dir, "output directory")->required();

  std::string attack_kind, grid_csv;
  int iterations = 10;
  std::size_t samples = 400;
  auto* attack_cmd = app.add_subcommand("attack", "accuracy under attack over a grid");
  attack_cmd->add_option("--kind", attack_kind, "fgsm | pgd | delay")->required();
  attack_cmd->add_option("--grid", grid_csv, "comma-separated grid values")->required();
  attack_cmd->add_option("--seed", seed, "toy problem / attack seed")->required();
  attack_cmd->add_option("--out", out_path, "write the CSV here");
  attack_cmd->add_option("--iters", iterations, "pgd iterations");
  attack_cmd->add_option("--samples", samples, "toy dataset size");

  std::string filter_name, attack_text;
  int window = 3, order = 2;
  double sigma = 0.1;
  auto* defend_cmd = app.add_subcommand("defend", "attacked vs defended accuracy");
  defend_cmd->add_option("--filter", filter_name, "mavg | median | savgol | noise")->required();
  defend_cmd->add_option("--attack", attack_text, "attack spec, e.g. fgsm:0.05 or pgd:0.5,n=40")
      ->required();
  defend_cmd->add_option("--out", out_path, "write the CSV here");
  defend_cmd->add_option("--window", window, "filter window (odd)");
  defend_cmd->add_option("--order", order, "savgol polynomial order");
  defend_cmd->add_option("--sigma", sigma, "noise sigma");
  defend_cmd->add_option("--seed", seed, "toy problem seed");
  defend_cmd->add_option("--samples", samples, "toy dataset size");

  std::string bench_op;
  std::uint64_t bench_iters = 10000;
  auto* bench_cmd = app.add_subcommand("bench", "measure API latency (reported, not asserted)");
  bench_cmd->add_option("--op", bench_op, "a_enable | a_add | flow_check")->required();
  bench_cmd->add_option("--iters", bench_iters, "iteration count")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);  // prints usage to the right stream
  }

  try {
    if (replay_cmd->parsed()) return cmd_replay(input, policy_path, report_path);
    if (gen_cmd->parsed()) return cmd_gen(av_name, seed, out_path);
    if (corpus_cmd->parsed()) return cmd_corpus(corpus_n, seed, corpus_dir);
    if (attack_cmd->parsed()) return cmd_attack(attack_kind, grid_csv, seed, out_path, iterations, samples);
    if (defend_cmd->parsed()) {
      return cmd_defend(filter_name, attack_text, out_path, window, order, sigma, seed, samples);
    }
    if (bench_cmd->parsed()) return cmd_bench(bench_op, bench_iters);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace bciflow::cli
