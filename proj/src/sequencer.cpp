#include "taskseq/sequencer.hpp"

#include <variant>

#include "taskseq/errors.hpp"
#include "taskseq/rng.hpp"

namespace taskseq {

namespace {

// Stream tags for per-episode seed derivation.
constexpr std::uint64_t kNoiseStream = 0x6e01;
constexpr std::uint64_t kInitStream = 0x1a17;

}  // namespace

Json step_log_to_json(const StepLog& log) {
  return Json{{"time_step", log.time_step},
              {"task_id", log.task_id},
              {"world", world_to_json(log.world)},
              {"observation", observation_to_json(log.observation)},
              {"command", command_to_json(log.command)},
              {"terminate", log.terminate},
              {"necessary_cost", encode_double(log.necessary_cost)},
              {"reward", encode_double(log.reward)}};
}

StepLog step_log_from_json(const Json& j) {
  StepLog log;
  log.time_step = j.at("time_step").get<std::int64_t>();
  log.task_id = j.at("task_id").get<std::string>();
  log.world = world_from_json(j.at("world"));
  log.observation = observation_from_json(j.at("observation"));
  log.command = command_from_json(j.at("command"));
  log.terminate = j.at("terminate").get<bool>();
  log.necessary_cost = decode_double(j.at("necessary_cost").get<std::string>());
  log.reward = decode_double(j.at("reward").get<std::string>());
  return log;
}

std::string outcome_kind_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Success: return "Success";
    case OutcomeKind::TaskTimeout: return "TaskTimeout";
    case OutcomeKind::Infeasible: return "Infeasible";
  }
  return "";
}

double step_reward(double cost_nec, bool terminated,
                   std::optional<bool> sufficient, const RewardParams& params) {
  if (terminated != sufficient.has_value()) {
    throw ContractViolationError(
        "step_reward: sufficient must be provided exactly at termination");
  }
  double r = -params.alpha * cost_nec - params.step_cost;
  if (terminated) r += *sufficient ? params.bonus : -params.penalty;
  return r;
}

SequenceRunner::SequenceRunner(const TaskRegistry& registry,
                               EnginePipeline& pipeline, RewardParams reward)
    : registry_(registry), pipeline_(pipeline), reward_(reward) {}

SequenceRunner::TaskRun SequenceRunner::run_task(const std::string& task_id,
                                                 const ConceptModel& model,
                                                 Policy& policy,
                                                 const WorldState& start,
                                                 std::vector<StepLog>* log) {
  policy.begin_episode(start);
  WorldState world = start;
  SenseResult sense = pipeline_.observe(world);

  for (int i = 0; i < model.max_steps; ++i) {
    const bool learned = policy.kind() != PolicyKind::Programmed;
    ActionDecision decision =
        policy.act(sense.observation, sense.observable, learned ? nullptr : &world);
    decision.command = clamp_command(decision.command, pipeline_.settings().limits);

    PipelineStepResult out = pipeline_.step(world, decision.command);
    world = std::move(out.world);
    sense.observation = out.observation;
    sense.observable = std::move(out.observable);

    if (log != nullptr) {
      StepLog entry;
      entry.time_step = world.time_step;
      entry.task_id = task_id;
      entry.world = world;
      entry.observation = sense.observation;
      entry.command = decision.command;
      entry.terminate = decision.terminate;
      entry.necessary_cost = necessary_cost(model, sense.observable);
      entry.reward = 0.0;
      log->push_back(std::move(entry));
    }

    if (decision.terminate) {
      return {true, std::move(world), policy.diagnostics()};
    }
  }
  return {false, std::move(world), policy.diagnostics()};
}

EpisodeResult SequenceRunner::run_sequence(const TaskSequence& seq,
                                           const std::optional<WorldState>& initial,
                                           std::uint64_t seed) {
  if (seq.mode != SequenceMode::Execute) {
    throw ConfigurationError("run_sequence requires an Execute-mode sequence");
  }
  pipeline_.set_noise_seed(derive_seed(seed, {kNoiseStream}));

  EpisodeResult result;
  std::optional<WorldState> world = initial;

  for (std::size_t i = 0; i < seq.task_ids.size(); ++i) {
    const std::string& task_id = seq.task_ids[i];
    const ConceptModel& model = registry_.at(task_id);

    WorldState start;
    try {
      if (!world.has_value()) {
        start = instantiate(
            model, sample_actor_configuration(model,
                                              derive_seed(seed, {kInitStream, i})));
      } else {
        start = instantiate(model, *world);
      }
    } catch (const IncompatibleStateError& e) {
      result.outcome = {OutcomeKind::Infeasible, task_id, e.what()};
      return result;
    }

    TaskBoundary boundary;
    boundary.task_id = task_id;
    boundary.first_step = result.trajectory.size();
    boundary.start_world = start;

    auto policy = registry_.make_policy(task_id);
    TaskRun run;
    try {
      run = run_task(task_id, model, *policy, start, &result.trajectory);
    } catch (const EngineStepError& e) {
      // Engine/backend failures end the episode; logs so far are kept.
      boundary.end_step = result.trajectory.size();
      boundary.end_world = start;
      result.boundaries.push_back(std::move(boundary));
      result.outcome = {OutcomeKind::Infeasible, task_id, e.what()};
      return result;
    }

    boundary.end_step = result.trajectory.size();
    boundary.end_world = run.end;
    boundary.terminated = run.terminated;
    boundary.diagnostics = std::move(run.diagnostics);
    result.boundaries.push_back(std::move(boundary));

    if (!run.terminated) {
      result.outcome = {OutcomeKind::TaskTimeout, task_id,
                        "no terminate signal within max_steps"};
      return result;
    }
    world = std::move(run.end);
  }

  result.outcome = {OutcomeKind::Success, "", ""};
  return result;
}

bool SequenceRunner::run_subsequent(const std::vector<std::string>& task_ids,
                                    const WorldState& world) {
  WorldState rolling = world;  // copy: evaluation rollouts leave no trace
  for (const std::string& task_id : task_ids) {
    const ConceptModel& model = registry_.at(task_id);
    WorldState start;
    try {
      start = instantiate(model, rolling);
    } catch (const IncompatibleStateError&) {
      return false;
    }
    auto policy = registry_.make_policy(task_id);
    TaskRun run = run_task(task_id, model, *policy, start, nullptr);
    if (!run.terminated) return false;
    if (const auto* pred = std::get_if<SufficientPredicate>(&model.sufficient)) {
      const auto cost = pred->bind(start);
      if (cost(run.end) > pred->epsilon) return false;
    }
    // Nested subsequent-task goals are not re-evaluated; termination of
    // the rollout task itself is the success signal at this depth.
    rolling = std::move(run.end);
  }
  return true;
}

bool all_task_goals_satisfied(const EpisodeResult& result,
                              const TaskRegistry& registry) {
  if (result.outcome.kind != OutcomeKind::Success) return false;
  for (const TaskBoundary& b : result.boundaries) {
    if (!b.terminated) return false;
    const ConceptModel& model = registry.at(b.task_id);
    if (const auto* pred = std::get_if<SufficientPredicate>(&model.sufficient)) {
      const auto cost = pred->bind(b.start_world);
      if (cost(b.end_world) > pred->epsilon) return false;
    }
  }
  if (!result.boundaries.empty()) {
    for (const auto& [id, obj] : result.boundaries.back().end_world.objects) {
      if (obj.crushed) return false;
    }
  }
  return true;
}

}  // namespace taskseq
