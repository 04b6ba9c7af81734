#include "taskseq/learning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

#include "taskseq/errors.hpp"
#include "taskseq/rng.hpp"

namespace taskseq {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e01;  // matches SequenceRunner
constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kResampleStream = 0x7e5a;
constexpr std::uint64_t kCemStream = 0xce3a;
constexpr std::uint64_t kEvalStream = 0xe7a1;

}  // namespace

TrainingEnv::TrainingEnv(TaskSequence seq, const TaskRegistry& registry,
                         EnginePipeline& pipeline, RewardParams reward,
                         bool record_trajectory)
    : seq_(std::move(seq)),
      registry_(registry),
      pipeline_(pipeline),
      reward_(reward),
      record_(record_trajectory),
      runner_(registry, pipeline, reward) {
  if (seq_.mode != SequenceMode::Train) {
    throw ConfigurationError("TrainingEnv requires a Train-mode sequence");
  }
  if (seq_.train_index < 0 ||
      seq_.train_index >= static_cast<int>(seq_.task_ids.size())) {
    throw ConfigurationError("train_index out of bounds");
  }
  train_task_id_ = seq_.task_ids[static_cast<std::size_t>(seq_.train_index)];
  registry_.at(train_task_id_);  // validate all ids resolve
  for (const auto& id : seq_.task_ids) registry_.at(id);
}

int TrainingEnv::param_dim() const {
  return registry_.at(train_task_id_).policy_param_count;
}

void TrainingEnv::set_candidate_params(std::span<const double> params) {
  candidate_params_.emplace(params.begin(), params.end());
}

std::optional<Observation> TrainingEnv::reset_attempt(std::uint64_t seed) {
  pipeline_.set_noise_seed(derive_seed(seed, {kNoiseStream}));
  trajectory_.clear();
  boundaries_.clear();
  episode_return_ = 0.0;
  steps_in_task_ = 0;
  sufficient_evaluations_ = 0;
  done_ = true;
  ready_ = false;

  // Pre-sequent tasks with frozen policies.
  std::optional<WorldState> world;
  const auto k = static_cast<std::size_t>(seq_.train_index);
  for (std::size_t i = 0; i < k; ++i) {
    const std::string& task_id = seq_.task_ids[i];
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
    } catch (const IncompatibleStateError&) {
      return std::nullopt;
    }
    TaskBoundary boundary;
    boundary.task_id = task_id;
    boundary.first_step = trajectory_.size();
    boundary.start_world = start;
    auto policy = registry_.make_policy(task_id);
    SequenceRunner::TaskRun run = runner_.run_task(
        task_id, model, *policy, start, record_ ? &trajectory_ : nullptr);
    boundary.end_step = trajectory_.size();
    boundary.end_world = run.end;
    boundary.terminated = run.terminated;
    boundary.diagnostics = std::move(run.diagnostics);
    boundaries_.push_back(std::move(boundary));
    if (!run.terminated) return std::nullopt;
    world = std::move(run.end);
  }

  // Task under training.
  const ConceptModel& model = registry_.at(train_task_id_);
  try {
    if (!world.has_value()) {
      task_start_ = instantiate(
          model, sample_actor_configuration(model,
                                            derive_seed(seed, {kInitStream, k})));
    } else {
      task_start_ = instantiate(model, *world);
    }
  } catch (const IncompatibleStateError&) {
    return std::nullopt;
  }

  policy_ = registry_.make_policy(train_task_id_);
  if (candidate_params_.has_value()) {
    policy_->set_params(*candidate_params_);
  }
  policy_->begin_episode(task_start_);

  world_ = task_start_;
  SenseResult sense = pipeline_.observe(world_);
  observation_ = sense.observation;
  observable_ = std::move(sense.observable);
  done_ = false;
  ready_ = true;
  return observation_;
}

Observation TrainingEnv::reset(std::uint64_t episode_seed) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const std::uint64_t seed =
        attempt == 0
            ? episode_seed
            : derive_seed(episode_seed,
                          {kResampleStream, static_cast<std::uint64_t>(attempt)});
    if (auto obs = reset_attempt(seed)) return *obs;
  }
  throw ResetExhaustedError(
      "no feasible reset in 100 attempts; the scenario is misconfigured");
}

TrainingEnv::StepResult TrainingEnv::step(const ActionDecision& action) {
  if (done_ || !ready_) {
    throw ContractViolationError("TrainingEnv::step called after done");
  }
  const ConceptModel& model = registry_.at(train_task_id_);

  ActionDecision decision = action;
  decision.command = clamp_command(decision.command, pipeline_.settings().limits);

  PipelineStepResult out = pipeline_.step(world_, decision.command);
  world_ = std::move(out.world);
  observation_ = out.observation;
  observable_ = std::move(out.observable);
  ++steps_in_task_;

  const double cost = necessary_cost(model, observable_);
  std::optional<bool> sufficient;
  if (decision.terminate) {
    sufficient = sufficient_satisfied(model, world_, task_start_, runner_);
    ++sufficient_evaluations_;
  }
  double reward = step_reward(cost, decision.terminate, sufficient, reward_);
  done_ = decision.terminate;
  if (!done_ && steps_in_task_ >= model.max_steps) {
    // Timeout: terminal penalty, no bonus, not an error.
    done_ = true;
    reward += -reward_.penalty;
  }
  episode_return_ += reward;

  if (record_) {
    StepLog entry;
    entry.time_step = world_.time_step;
    entry.task_id = train_task_id_;
    entry.world = world_;
    entry.observation = observation_;
    entry.command = decision.command;
    entry.terminate = decision.terminate;
    entry.necessary_cost = cost;
    entry.reward = reward;
    trajectory_.push_back(std::move(entry));
  }

  return {observation_, reward, done_};
}

double run_candidate_episode(TrainingEnv& env, std::span<const double> params,
                             std::uint64_t episode_seed) {
  env.set_candidate_params(params);
  env.reset(episode_seed);
  while (!env.done()) {
    ActionDecision decision =
        env.policy().act(env.observation(), env.observable(), nullptr);
    env.step(decision);
  }
  return env.episode_return();
}

EpisodeResult run_training_episode(const TaskSequence& seq,
                                   std::span<const double> candidate_params,
                                   const TaskRegistry& registry,
                                   EnginePipeline& pipeline, std::uint64_t seed,
                                   const RewardParams& reward) {
  TrainingEnv env(seq, registry, pipeline, reward, /*record_trajectory=*/true);
  env.set_candidate_params(candidate_params);

  EpisodeResult result;
  if (!env.reset_attempt(seed)) {
    result.outcome = {OutcomeKind::Infeasible,
                      env.train_task_id(),
                      "a pre-sequent task failed; resample the seed"};
    result.trajectory = env.trajectory();
    result.boundaries = env.boundaries();
    return result;
  }

  bool terminated = false;
  while (!env.done()) {
    ActionDecision decision =
        env.policy().act(env.observation(), env.observable(), nullptr);
    terminated = env.step(decision).done && decision.terminate;
  }

  TaskBoundary boundary;
  boundary.task_id = env.train_task_id();
  boundary.first_step =
      env.boundaries().empty() ? 0 : env.boundaries().back().end_step;
  boundary.end_step = env.trajectory().size();
  boundary.start_world = env.task_start_world();
  boundary.end_world = env.world();
  boundary.terminated = terminated;
  boundary.diagnostics = env.policy().diagnostics();

  result.trajectory = env.trajectory();
  result.boundaries = env.boundaries();
  result.boundaries.push_back(std::move(boundary));
  result.episode_return = env.episode_return();
  result.outcome = terminated
                       ? Outcome{OutcomeKind::Success, "", ""}
                       : Outcome{OutcomeKind::TaskTimeout, env.train_task_id(),
                                 "no terminate signal within max_steps"};
  return result;
}

// ---------------------------------------------------------------------------
// CEM.
// ---------------------------------------------------------------------------

std::uint64_t candidate_episode_seed(std::uint64_t root, int iter, int cand,
                                     int ep) {
  return derive_seed(root, {kEvalStream, static_cast<std::uint64_t>(iter),
                            static_cast<std::uint64_t>(cand),
                            static_cast<std::uint64_t>(ep)});
}

namespace {

void validate_config(const TrainConfig& c, int dim) {
  if (dim <= 0) throw ConfigurationError("cem: dim must be positive");
  if (c.population < 4) throw ConfigurationError("cem: population must be >= 4");
  if (!(c.elite_fraction > 0.0 && c.elite_fraction <= 0.5)) {
    throw ConfigurationError("cem: elite_fraction must be in (0, 0.5]");
  }
  if (c.iterations <= 0 || c.episodes_per_candidate <= 0 ||
      c.init_sigma <= 0.0 || c.sigma_floor <= 0.0) {
    throw ConfigurationError("cem: config values must be positive");
  }
}

}  // namespace

TrainReport cem_optimize(const ObjectiveFactory& objective_factory, int dim,
                         const TrainConfig& config) {
  validate_config(config, dim);
  const auto t0 = std::chrono::steady_clock::now();

  const int pop = config.population;
  const int n_elite = std::max(
      1, static_cast<int>(std::llround(pop * config.elite_fraction)));

  std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> sigma(static_cast<std::size_t>(dim), config.init_sigma);

  TrainReport report;
  report.best_return = -std::numeric_limits<double>::infinity();

  const int worker_count = std::max(1, std::min(config.workers, pop));

  for (int iter = 0; iter < config.iterations; ++iter) {
    // Sampling is serial so results are worker-count independent. A
    // quarter of the population is always drawn from the initial
    // distribution: terminal bonuses are sparse, and without sustained
    // wide exploration the search can converge onto the
    // terminate-immediately plateau before ever seeing one.
    Rng sample_rng(derive_seed(config.seed,
                               {kCemStream, static_cast<std::uint64_t>(iter)}));
    const int explore = pop / 4;
    std::vector<std::vector<double>> candidates(static_cast<std::size_t>(pop));
    for (int c = 0; c < pop; ++c) {
      auto& x = candidates[static_cast<std::size_t>(c)];
      x.resize(static_cast<std::size_t>(dim));
      const bool wide = c > 0 && c <= explore;
      for (int d = 0; d < dim; ++d) {
        const double center = wide ? 0.0 : mu[static_cast<std::size_t>(d)];
        const double scale = wide ? config.init_sigma
                                  : sigma[static_cast<std::size_t>(d)];
        x[static_cast<std::size_t>(d)] = center + scale * sample_rng.gaussian();
      }
    }
    // Elitism: the best candidate seen so far re-enters the pool, so a
    // rare early success keeps proving itself on fresh episode seeds and
    // anchors the distribution update.
    if (!report.best_params.empty()) {
      candidates[0] = report.best_params;
    }

    std::vector<double> returns(static_cast<std::size_t>(pop), 0.0);
    if (worker_count == 1) {
      EpisodeObjective objective = objective_factory();
      for (int c = 0; c < pop; ++c) {
        double sum = 0.0;
        for (int ep = 0; ep < config.episodes_per_candidate; ++ep) {
          sum += objective(candidates[static_cast<std::size_t>(c)],
                           candidate_episode_seed(config.seed, iter, c, ep));
        }
        returns[static_cast<std::size_t>(c)] =
            sum / config.episodes_per_candidate;
      }
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(worker_count));
      for (int w = 0; w < worker_count; ++w) {
        threads.emplace_back([&] {
          EpisodeObjective objective = objective_factory();
          while (true) {
            const int c = next.fetch_add(1);
            if (c >= pop) break;
            double sum = 0.0;
            for (int ep = 0; ep < config.episodes_per_candidate; ++ep) {
              sum += objective(candidates[static_cast<std::size_t>(c)],
                               candidate_episode_seed(config.seed, iter, c, ep));
            }
            returns[static_cast<std::size_t>(c)] =
                sum / config.episodes_per_candidate;
          }
        });
      }
      for (auto& t : threads) t.join();
    }

    // Elite set: ties broken by index so ordering is deterministic.
    std::vector<int> order(static_cast<std::size_t>(pop));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double ra = returns[static_cast<std::size_t>(a)];
      const double rb = returns[static_cast<std::size_t>(b)];
      if (ra != rb) return ra > rb;
      return a < b;
    });

    for (int d = 0; d < dim; ++d) {
      double mean = 0.0;
      for (int e = 0; e < n_elite; ++e) {
        mean += candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]
                          [static_cast<std::size_t>(d)];
      }
      mean /= n_elite;
      double var = 0.0;
      for (int e = 0; e < n_elite; ++e) {
        const double diff =
            candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])]
                      [static_cast<std::size_t>(d)] -
            mean;
        var += diff * diff;
      }
      var /= n_elite;
      mu[static_cast<std::size_t>(d)] = mean;
      sigma[static_cast<std::size_t>(d)] =
          std::max(config.sigma_floor, std::sqrt(var));
    }

    const int best_idx = order[0];
    const double best = returns[static_cast<std::size_t>(best_idx)];
    if (best > report.best_return) {
      report.best_return = best;
      report.best_params = candidates[static_cast<std::size_t>(best_idx)];
    }

    IterationStats stats;
    stats.mean_return =
        std::accumulate(returns.begin(), returns.end(), 0.0) / pop;
    stats.best_return = best;
    stats.best_so_far = report.best_return;
    stats.param_mean = mu;
    stats.param_sigma = sigma;
    report.iterations.push_back(std::move(stats));
  }

  report.final_params = mu;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

TrainReport cem_train(const EnvFactory& env_factory, int dim,
                      const TrainConfig& config) {
  ObjectiveFactory factory = [&env_factory]() -> EpisodeObjective {
    std::shared_ptr<TrainingEnv> env = env_factory();
    return [env](std::span<const double> params, std::uint64_t seed) {
      return run_candidate_episode(*env, params, seed);
    };
  };
  return cem_optimize(factory, dim, config);
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

double evaluate(std::span<const double> params, const std::string& task_id,
                const TaskSequence& seq, const TaskRegistry& registry,
                EnginePipeline& pipeline, int n_episodes, std::uint64_t seed,
                const RewardParams& reward) {
  if (n_episodes <= 0) {
    std::cerr << "warning: evaluate called with n_episodes = " << n_episodes
              << "; returning 0\n";
    return 0.0;
  }
  TaskRegistry frozen = registry;
  if (!params.empty()) {
    frozen.set_policy_params(task_id,
                             std::vector<double>(params.begin(), params.end()));
  }
  SequenceRunner runner(frozen, pipeline, reward);
  TaskSequence exec = seq;
  exec.mode = SequenceMode::Execute;

  int successes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    const std::uint64_t episode_seed =
        derive_seed(seed, {kEvalStream, static_cast<std::uint64_t>(e)});
    EpisodeResult result = runner.run_sequence(exec, std::nullopt, episode_seed);
    if (all_task_goals_satisfied(result, frozen)) ++successes;
  }
  return static_cast<double>(successes) / n_episodes;
}

}  // namespace taskseq
