#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "taskseq/errors.hpp"
#include "taskseq/learning.hpp"
#include "taskseq/sequencer.hpp"
#include "taskseq/wire.hpp"

namespace taskseq {

/// Parse failure with position information. `field` names the offending
/// field when the defect is semantic rather than syntactic.
struct ParseError : Error {
  ParseError(const std::string& what, int line, int column, std::string field)
      : Error(what + (field.empty() ? "" : " (field '" + field + "')") +
              " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line(line),
        column(column),
        field(std::move(field)) {}
  int line = 1;
  int column = 1;
  std::string field;
};

struct EngineBackendSpec {
  bool remote = false;
  std::string endpoint;  // "host[:port]", remote only
};

struct TaskSpec {
  std::string id;
  std::string model;               // registry key: grasp, pick, ...
  Json params = Json::object();    // model-specific overrides
  std::string params_file;         // frozen policy parameters, optional
};

struct ScenarioOutput {
  std::string dir = "out";
};

struct Scenario {
  int version = 1;
  std::uint64_t seed = 0;
  SequenceMode mode = SequenceMode::Execute;
  std::string train_task;  // train mode only
  double aperture_max = 0.15;
  double sigma_d = 0.01;
  std::vector<TaskSpec> tasks;
  std::vector<std::string> sequence;
  std::map<EngineRole, EngineBackendSpec> engines;  // absent role = local
  RewardParams reward{};
  TrainConfig train{};
  ScenarioOutput output{};
  std::filesystem::path base_dir = ".";  // for resolving params files
};

/// Strict parse: unknown fields are errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Canonical form; parse(serialize(s)) reproduces s.
std::string serialize_scenario(const Scenario& s);

struct Diagnostic {
  std::string task_id;  // empty for scenario-level findings
  std::string message;
};

/// Resolves model keys and checks sequence compatibility (each task's
/// declared initial pattern must be producible by its predecessor) plus
/// engine endpoint syntax. Empty result = valid.
std::vector<Diagnostic> validate_scenario(const Scenario& s);

// ---------------------------------------------------------------------------
// Runtime assembly.
// ---------------------------------------------------------------------------

/// Builds the task registry described by the scenario, loading any
/// referenced policy parameter files.
TaskRegistry build_registry(const Scenario& s);

/// Builds the engine pipeline (local or remote backends per role).
std::unique_ptr<EnginePipeline> build_pipeline(const Scenario& s);

TaskSequence scenario_sequence(const Scenario& s);

// ---------------------------------------------------------------------------
// Policy parameter files.
// ---------------------------------------------------------------------------

struct PolicyParamsFile {
  std::string family;
  int dim = 0;
  std::string model;
  std::vector<double> params;
};

std::string encode_policy_params(const PolicyParamsFile& p);
PolicyParamsFile decode_policy_params(const std::string& text);

// ---------------------------------------------------------------------------
// Log files.
// ---------------------------------------------------------------------------

/// Line-delimited trajectory log: one StepLog object per line and a
/// trailing summary line with the outcome (and return in train mode).
std::string render_trajectory_log(const EpisodeResult& result,
                                  const TaskRegistry& registry);

/// Deterministic training metrics: one line per iteration plus a final
/// line. Wall-clock time is deliberately absent.
std::string render_metrics_log(const TrainReport& report);

// ---------------------------------------------------------------------------
// Command-line entry point (subcommands: validate, run, train,
// serve-engine). Exit codes: 0 success, 1 scenario errors, 2 runtime
// failures.
// ---------------------------------------------------------------------------

int run_command(const std::vector<std::string>& args);

}  // namespace taskseq
