#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskseq/sequencer.hpp"

namespace taskseq {

// ---------------------------------------------------------------------------
// Episodic environment over a training sequence.
// ---------------------------------------------------------------------------

/// Wraps a TaskSequence[Train k] as a reset/step environment: reset runs
/// the pre-sequent tasks with frozen policies and returns the first
/// observation of task k; step advances one pipeline step of task k and
/// returns the shaped reward. The sufficient goal is evaluated exactly
/// once, at the terminate signal, on a copied world.
class TrainingEnv {
 public:
  TrainingEnv(TaskSequence seq, const TaskRegistry& registry,
              EnginePipeline& pipeline, RewardParams reward = {},
              bool record_trajectory = true);

  int param_dim() const;
  const std::string& train_task_id() const { return train_task_id_; }

  /// Installs candidate parameters; applied at the next reset.
  void set_candidate_params(std::span<const double> params);

  /// Single feasibility attempt; nullopt when a pre-sequent task fails.
  std::optional<Observation> reset_attempt(std::uint64_t seed);

  /// Resamples seeds on infeasibility, up to 100 attempts.
  Observation reset(std::uint64_t episode_seed);

  struct StepResult {
    Observation observation{};
    double reward = 0.0;
    bool done = false;
  };

  /// Throws ContractViolationError when called after done.
  StepResult step(const ActionDecision& action);

  bool done() const { return done_; }
  double episode_return() const { return episode_return_; }
  int steps_in_task() const { return steps_in_task_; }
  int sufficient_evaluations() const { return sufficient_evaluations_; }
  const Observation& observation() const { return observation_; }
  const ObservableState& observable() const { return observable_; }
  const WorldState& world() const { return world_; }
  Policy& policy() { return *policy_; }
  const std::vector<StepLog>& trajectory() const { return trajectory_; }
  const std::vector<TaskBoundary>& boundaries() const { return boundaries_; }
  const WorldState& task_start_world() const { return task_start_; }

 private:
  TaskSequence seq_;
  const TaskRegistry& registry_;
  EnginePipeline& pipeline_;
  RewardParams reward_;
  bool record_;
  std::string train_task_id_;
  SequenceRunner runner_;

  std::optional<std::vector<double>> candidate_params_;
  std::unique_ptr<Policy> policy_;
  WorldState world_;
  WorldState task_start_;
  Observation observation_{};
  ObservableState observable_{};
  bool ready_ = false;
  bool done_ = true;
  int steps_in_task_ = 0;
  int sufficient_evaluations_ = 0;
  double episode_return_ = 0.0;
  std::vector<StepLog> trajectory_;
  std::vector<TaskBoundary> boundaries_;
};

/// Steps the env's own candidate policy until done; returns the episode
/// return. The shared core behind CEM evaluation and
/// run_training_episode.
double run_candidate_episode(TrainingEnv& env, std::span<const double> params,
                             std::uint64_t episode_seed);

// ---------------------------------------------------------------------------
// Cross-entropy training.
// ---------------------------------------------------------------------------

struct TrainConfig {
  int population = 64;
  double elite_fraction = 0.125;
  int iterations = 50;
  int episodes_per_candidate = 8;
  double init_sigma = 1.0;
  double sigma_floor = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct IterationStats {
  double mean_return = 0.0;
  double best_return = 0.0;
  double best_so_far = 0.0;
  std::vector<double> param_mean;
  std::vector<double> param_sigma;
};

struct TrainReport {
  std::vector<IterationStats> iterations;
  std::vector<double> final_params;
  std::vector<double> best_params;  // best single candidate seen
  double best_return = 0.0;
  double wall_seconds = 0.0;  // informational; never serialized
};

/// Evaluates one candidate for one seeded episode. Factories produce one
/// evaluator per worker; evaluators own their full simulator stack.
using EpisodeObjective = std::function<double(std::span<const double>, std::uint64_t)>;
using ObjectiveFactory = std::function<EpisodeObjective()>;
using EnvFactory = std::function<std::unique_ptr<TrainingEnv>()>;

/// Derivative-free CEM: sample N(mu, sigma^2 I), evaluate each candidate
/// over episodes_per_candidate derived seeds, refit mu/sigma on the
/// elite set, clamp sigma at sigma_floor. Deterministic given
/// config.seed, for any worker count.
TrainReport cem_optimize(const ObjectiveFactory& objective_factory, int dim,
                         const TrainConfig& config);

TrainReport cem_train(const EnvFactory& env_factory, int dim,
                      const TrainConfig& config);

/// Seed of episode `ep` for candidate `cand` at iteration `iter` — a
/// pure function, so evaluation order can never affect results.
std::uint64_t candidate_episode_seed(std::uint64_t root, int iter, int cand,
                                     int ep);

// ---------------------------------------------------------------------------
// Frozen-policy evaluation.
// ---------------------------------------------------------------------------

/// Runs n seeded Execute-mode episodes of the full sequence with
/// `params` installed on `task_id`, and returns the fraction that end in
/// Success with every goal predicate satisfied. n == 0 warns and
/// returns 0.
double evaluate(std::span<const double> params, const std::string& task_id,
                const TaskSequence& seq, const TaskRegistry& registry,
                EnginePipeline& pipeline, int n_episodes, std::uint64_t seed,
                const RewardParams& reward = {});

}  // namespace taskseq
