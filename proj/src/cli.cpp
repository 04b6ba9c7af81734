#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "taskseq/scenario.hpp"
#include "taskseq/tasks.hpp"

namespace taskseq {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitScenarioError = 1;
constexpr int kExitRuntimeError = 2;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << msg << "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

struct CommonOptions {
  std::string file;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int workers = 0;  // 0 = hardware default
  std::string log_level = "info";
};

void apply_log_level(const std::string& level) {
  if (level == "quiet" || level == "error") {
    g_log_level = 0;
  } else if (level == "debug") {
    g_log_level = 2;
  } else {
    g_log_level = 1;
  }
}

Scenario load_with_overrides(const CommonOptions& opts) {
  Scenario s = load_scenario_file(opts.file);
  if (opts.seed.has_value()) {
    s.seed = *opts.seed;
    s.train.seed = *opts.seed;
  }
  if (!opts.out_dir.empty()) s.output.dir = opts.out_dir;
  return s;
}

int report_diagnostics(const std::vector<Diagnostic>& diags) {
  for (const Diagnostic& d : diags) {
    std::cerr << "scenario error";
    if (!d.task_id.empty()) std::cerr << " [" << d.task_id << "]";
    std::cerr << ": " << d.message << "\n";
  }
  return diags.empty() ? kExitOk : kExitScenarioError;
}

int cmd_validate(const CommonOptions& opts) {
  Scenario s = load_with_overrides(opts);
  const int rc = report_diagnostics(validate_scenario(s));
  if (rc == kExitOk) info("scenario ok: " + opts.file);
  return rc;
}

int cmd_run(const CommonOptions& opts) {
  Scenario s = load_with_overrides(opts);
  if (s.mode != SequenceMode::Execute) {
    std::cerr << "run requires an execute-mode scenario\n";
    return kExitScenarioError;
  }
  const int rc = report_diagnostics(validate_scenario(s));
  if (rc != kExitOk) return rc;

  TaskRegistry registry = build_registry(s);
  std::unique_ptr<EnginePipeline> pipeline;
  try {
    pipeline = build_pipeline(s);
  } catch (const WireError& e) {
    std::cerr << "engine backend failure: " << e.what() << "\n";
    return kExitRuntimeError;
  }

  SequenceRunner runner(registry, *pipeline, s.reward);
  EpisodeResult result;
  try {
    result = runner.run_sequence(scenario_sequence(s), std::nullopt, s.seed);
  } catch (const EngineStepError& e) {
    std::cerr << "engine failure: " << e.what() << "\n";
    return kExitRuntimeError;
  }

  const std::filesystem::path out_dir = s.output.dir;
  write_file(out_dir / "trajectory.log", render_trajectory_log(result, registry));

  const bool goals = all_task_goals_satisfied(result, registry);
  std::cout << "outcome: " << outcome_kind_name(result.outcome.kind);
  if (result.outcome.kind != OutcomeKind::Success) {
    std::cout << " (" << result.outcome.task_id << ": " << result.outcome.detail
              << ")";
  }
  std::cout << "\nsteps: " << result.trajectory.size()
            << "\ngoals_satisfied: " << (goals ? "true" : "false")
            << "\ntrajectory: " << (out_dir / "trajectory.log").string() << "\n";

  if (result.outcome.kind != OutcomeKind::Success) {
    // Remote-engine failures surface as Infeasible outcomes with detail.
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_train(const CommonOptions& opts) {
  Scenario s = load_with_overrides(opts);
  if (s.mode != SequenceMode::Train) {
    std::cerr << "train requires a train-mode scenario\n";
    return kExitScenarioError;
  }
  const int rc = report_diagnostics(validate_scenario(s));
  if (rc != kExitOk) return rc;

  bool any_remote = false;
  for (const auto& [role, backend] : s.engines) any_remote |= backend.remote;

  TrainConfig config = s.train;
  config.workers = opts.workers > 0
                       ? opts.workers
                       : static_cast<int>(std::thread::hardware_concurrency());
  if (config.workers < 1) config.workers = 1;
  if (any_remote && config.workers > 1) {
    info("remote engines serve one connection at a time; using 1 worker");
    config.workers = 1;
  }

  const TaskSequence seq = scenario_sequence(s);
  const TaskRegistry registry = build_registry(s);
  const ConceptModel& model = registry.at(s.train_task);
  const int dim = model.policy_param_count;

  // Each worker owns a full simulator stack.
  struct WorkerStack {
    TaskRegistry registry;
    std::unique_ptr<EnginePipeline> pipeline;
  };
  std::vector<std::shared_ptr<WorkerStack>> stacks;
  EnvFactory factory = [&]() {
    auto stack = std::make_shared<WorkerStack>();
    stack->registry = build_registry(s);
    stack->pipeline = build_pipeline(s);
    stacks.push_back(stack);
    return std::make_unique<TrainingEnv>(seq, stack->registry, *stack->pipeline,
                                         s.reward, /*record_trajectory=*/false);
  };

  TrainReport report;
  try {
    report = cem_train(factory, dim, config);
  } catch (const WireError& e) {
    std::cerr << "engine backend failure: " << e.what() << "\n";
    return kExitRuntimeError;
  }

  const std::filesystem::path out_dir = s.output.dir;
  write_file(out_dir / "metrics.log", render_metrics_log(report));
  PolicyParamsFile params_file;
  params_file.family = model.policy_family;
  params_file.dim = dim;
  params_file.model = model.id;
  params_file.params = report.final_params;
  write_file(out_dir / "policy.params", encode_policy_params(params_file));

  info("trained '" + s.train_task + "' for " +
       std::to_string(config.iterations) + " iterations in " +
       std::to_string(report.wall_seconds) + "s (" +
       std::to_string(config.workers) + " workers)");
  std::cout << "best_return: " << report.best_return
            << "\nmetrics: " << (out_dir / "metrics.log").string()
            << "\npolicy: " << (out_dir / "policy.params").string() << "\n";
  return kExitOk;
}

int cmd_serve(const std::string& role_name, int port) {
  const EngineRole role = engine_role_from_name(role_name);
  EngineServer server(make_local_engine(role), port);
  std::cout << "serving " << role_name << " engine on port " << server.port()
            << std::endl;
  server.run();
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"task-sequencing manipulation simulator"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string serve_role;
  int serve_port = default_engine_port();

  auto add_common = [&opts](CLI::App* cmd, bool needs_file) {
    if (needs_file) {
      cmd->add_option("file", opts.file, "scenario file")->required();
    }
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--workers", opts.workers,
                    "trainer worker count (default: available cores)");
    cmd->add_option("--log-level", opts.log_level, "quiet | info | debug");
  };

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  add_common(validate, true);
  CLI::App* run = app.add_subcommand("run", "run an execute-mode scenario");
  add_common(run, true);
  CLI::App* train = app.add_subcommand("train", "train a train-mode scenario");
  add_common(train, true);
  CLI::App* serve =
      app.add_subcommand("serve-engine", "host one engine role over TCP");
  serve->add_option("--role", serve_role, "kinematics | physics | feature | postprocess")
      ->required();
  serve->add_option("--port", serve_port, "listen port (0 = ephemeral)");
  serve->add_option("--log-level", opts.log_level, "quiet | info | debug");

  std::vector<const char*> argv;
  argv.push_back("taskseq");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitScenarioError;
  }

  apply_log_level(opts.log_level);
  try {
    if (validate->parsed()) return cmd_validate(opts);
    if (run->parsed()) return cmd_run(opts);
    if (train->parsed()) return cmd_train(opts);
    if (serve->parsed()) return cmd_serve(serve_role, serve_port);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitScenarioError;
  } catch (const WireError& e) {
    std::cerr << "wire failure: " << e.what() << "\n";
    return kExitRuntimeError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitScenarioError;
}

}  // namespace taskseq
