#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskseq/codec.hpp"
#include "taskseq/concept_model.hpp"
#include "taskseq/engines.hpp"

namespace taskseq {

enum class SequenceMode { Execute, Train };

struct TaskSequence {
  std::vector<std::string> task_ids;
  SequenceMode mode = SequenceMode::Execute;
  int train_index = 0;  // Train mode: the task under training
};

struct StepLog {
  std::int64_t time_step = 0;
  std::string task_id;
  WorldState world;  // post-step state
  Observation observation{};
  Command command{};
  bool terminate = false;
  double necessary_cost = 0.0;
  double reward = 0.0;
};

Json step_log_to_json(const StepLog& log);
StepLog step_log_from_json(const Json& j);

struct TaskBoundary {
  std::string task_id;
  std::size_t first_step = 0;  // index into the trajectory
  std::size_t end_step = 0;    // one past the last step
  WorldState start_world;
  WorldState end_world;
  bool terminated = false;
  std::map<std::string, double> diagnostics;
};

enum class OutcomeKind { Success, TaskTimeout, Infeasible };

struct Outcome {
  OutcomeKind kind = OutcomeKind::Success;
  std::string task_id;  // the failing task, when not Success
  std::string detail;
};

std::string outcome_kind_name(OutcomeKind kind);

struct EpisodeResult {
  Outcome outcome{};
  std::vector<StepLog> trajectory;
  double episode_return = 0.0;  // training mode only
  std::vector<TaskBoundary> boundaries;
};

// ---------------------------------------------------------------------------
// Rewards.
// ---------------------------------------------------------------------------

struct RewardParams {
  double alpha = 1.0;      // necessary-cost weight
  double step_cost = 0.01;
  double bonus = 10.0;     // sufficient goal met at terminate
  double penalty = 5.0;    // terminate without the sufficient goal
};

/// r = -alpha * cost - step_cost, plus bonus/-penalty at termination.
/// `sufficient` must be set exactly when `terminated` is true.
double step_reward(double cost_nec, bool terminated,
                   std::optional<bool> sufficient,
                   const RewardParams& params = {});

// ---------------------------------------------------------------------------
// Sequence runner (the concept interface).
// ---------------------------------------------------------------------------

/// Chooses and switches between task blocks: each task steps its policy
/// through the pipeline until it signals completion, and the next task
/// is instantiated from the previous end state. One instance runs one
/// episode at a time.
class SequenceRunner : public SubsequentRunner {
 public:
  SequenceRunner(const TaskRegistry& registry, EnginePipeline& pipeline,
                 RewardParams reward = {});

  /// Execute-mode episode. Task 0 starts from `initial` when given, else
  /// from its sampled actor configuration. Sufficient goals are never
  /// evaluated here; switching relies solely on the terminate signal.
  EpisodeResult run_sequence(const TaskSequence& seq,
                             const std::optional<WorldState>& initial,
                             std::uint64_t seed);

  /// Rolls out tasks on a copy of `world` with their fixed policies;
  /// true when every task terminates and satisfies its own predicate
  /// goal. Used by sufficient-goal evaluation during training.
  bool run_subsequent(const std::vector<std::string>& task_ids,
                      const WorldState& world) override;

  const TaskRegistry& registry() const { return registry_; }
  EnginePipeline& pipeline() { return pipeline_; }
  const RewardParams& reward_params() const { return reward_; }

  struct TaskRun {
    bool terminated = false;
    WorldState end;
    std::map<std::string, double> diagnostics;
  };

  /// Steps one task's policy until terminate or max_steps. Appends a
  /// StepLog per step when `log` is given.
  TaskRun run_task(const std::string& task_id, const ConceptModel& model,
                   Policy& policy, const WorldState& start,
                   std::vector<StepLog>* log);

 private:
  const TaskRegistry& registry_;
  EnginePipeline& pipeline_;
  RewardParams reward_;
};

/// Train-mode episode: runs tasks before train_index with frozen
/// policies, installs `candidate_params` into the task under training,
/// accumulates per-step reward, and evaluates the sufficient goal once
/// at the terminate signal. Defined next to TrainingEnv so both paths
/// share one stepping core.
EpisodeResult run_training_episode(const TaskSequence& seq,
                                   std::span<const double> candidate_params,
                                   const TaskRegistry& registry,
                                   EnginePipeline& pipeline,
                                   std::uint64_t seed,
                                   const RewardParams& reward = {});

/// Post-hoc check used by evaluation: every task terminated, no object
/// crushed, and every predicate-form sufficient goal holds on its task's
/// end state. Subsequent-task goals are covered by the sequence itself.
bool all_task_goals_satisfied(const EpisodeResult& result,
                              const TaskRegistry& registry);

}  // namespace taskseq
