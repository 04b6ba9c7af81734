#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "taskseq/engines.hpp"
#include "taskseq/world.hpp"

namespace taskseq {

// ---------------------------------------------------------------------------
// Partially known dynamics parameters and actor configurations.
// ---------------------------------------------------------------------------

struct ParameterSpec {
  std::string name;
  std::optional<double> value;  // set when known
  bool known = true;
  std::optional<std::pair<double, double>> randomization_range;  // when unknown
};

enum class ActorRole { TargetObject, Environment, EndEffector };

struct ActorProperty {
  std::string name;
  std::optional<double> value;
  std::optional<std::pair<double, double>> range;  // non-observable props only
};

struct ActorConfiguration {
  struct Actor {
    ActorRole role = ActorRole::TargetObject;
    std::string id;
    std::vector<ActorProperty> properties;
  };
  std::vector<Actor> actors;
};

/// Result of sampling: every ranged property and every unknown
/// parameter's hidden ground truth fixed to a value.
struct ResolvedActorConfiguration {
  std::size_t config_index = 0;
  std::map<std::string, double> values;             // "actor.property"
  std::map<std::string, double> hidden_parameters;  // unknown ParameterSpec
};

// ---------------------------------------------------------------------------
// Goals.
// ---------------------------------------------------------------------------

/// Goal over observable state; its cost is evaluated after every action.
struct NecessaryGoal {
  std::function<double(const ObservableState&)> cost;
  double epsilon = 1e-9;
  bool satisfied(const ObservableState& o) const { return cost(o) <= epsilon; }
};

/// Full-state goal. `bind` captures the task's start world so relative
/// goals (displacements, lift heights) can be expressed.
struct SufficientPredicate {
  std::function<std::function<double(const WorldState&)>(
      const WorldState& start)>
      bind;
  double epsilon = 1e-9;
};

/// Sufficient goal realized as "these tasks succeed afterwards".
struct SubsequentTaskGoal {
  std::vector<std::string> task_ids;
};

using SufficientGoal = std::variant<SufficientPredicate, SubsequentTaskGoal>;

// ---------------------------------------------------------------------------
// Policies.
// ---------------------------------------------------------------------------

enum class PolicyKind { Programmed, Learned, UnderTraining };

struct ActionDecision {
  Command command{};
  bool terminate = false;
};

/// Per-episode action source. Learned policies receive world == nullptr;
/// only programmed policies may read full state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyKind kind() const = 0;
  virtual void begin_episode(const WorldState& start) { (void)start; }
  virtual ActionDecision act(const Observation& obs,
                             const ObservableState& observable,
                             const WorldState* world) = 0;
  virtual int param_count() const { return 0; }
  virtual void set_params(std::span<const double> params) { (void)params; }
  virtual std::vector<double> params() const { return {}; }
  /// Episode-end scalars (estimator state etc.) surfaced in results.
  virtual std::map<std::string, double> diagnostics() const { return {}; }
};

// ---------------------------------------------------------------------------
// Attachment patterns (initial-state compatibility).
// ---------------------------------------------------------------------------

struct AttachmentPattern {
  enum class Req { Any, Yes, No };
  Req ee_attached = Req::Any;
  Req resting = Req::Any;
  Req rigid = Req::Any;

  /// Checks the pattern against the world's target object.
  bool matches(const WorldState& w) const;
  std::string mismatch_reason(const WorldState& w) const;

  /// True when `produced` guarantees everything this pattern requires.
  bool satisfiable_by(const AttachmentPattern& produced) const;
};

// ---------------------------------------------------------------------------
// Concept model.
// ---------------------------------------------------------------------------

struct ScrewClass {
  enum class Kind { Translation, Rotation };
  enum class Contact { Make, Break, Maintain };
  Kind kind = Kind::Translation;
  int dof = 1;
  Contact contact = Contact::Make;
};

/// Trainable-and-composable task description: actor configurations, an
/// initial-state rule, a necessary goal over observable state, a
/// sufficient goal over full state (or subsequent tasks), and the
/// partially known dynamics parameters.
struct ConceptModel {
  std::string id;  // model key ("grasp", "pick", ...)
  ScrewClass screw_class;
  std::vector<ActorConfiguration> actor_configs;
  NecessaryGoal necessary;
  SufficientGoal sufficient;
  std::vector<ParameterSpec> parameters;
  int max_steps = 100;

  AttachmentPattern instantiate_pattern;  // enforced on previous end states
  AttachmentPattern requires_pattern;     // declared need, for validation
  AttachmentPattern produces_pattern;     // declared outcome, for validation

  bool config_provides_initial = false;
  std::function<WorldState(const ResolvedActorConfiguration&)> build_initial;

  std::function<std::unique_ptr<Policy>()> make_policy;
  int policy_param_count = 0;    // > 0 for trainable policy families
  std::string policy_family;     // e.g. "linear6x4"; "" when programmed
};

/// Samples every ranged actor property and every unknown parameter's
/// hidden ground truth uniformly, deterministically per (model, seed).
ResolvedActorConfiguration sample_actor_configuration(const ConceptModel& model,
                                                      std::uint64_t seed);

/// Fresh world from a resolved configuration.
WorldState instantiate(const ConceptModel& model,
                       const ResolvedActorConfiguration& config);

/// State continuity: the previous end state passes through unmodified.
/// Throws IncompatibleStateError when it violates the model's declared
/// initial attachment pattern.
WorldState instantiate(const ConceptModel& model,
                       const WorldState& previous_end_state);

double necessary_cost(const ConceptModel& model, const ObservableState& obs);

/// Runs subsequent tasks on behalf of sufficient-goal evaluation.
/// Implementations roll out on a copied world and discard side effects.
class SubsequentRunner {
 public:
  virtual ~SubsequentRunner() = default;
  virtual bool run_subsequent(const std::vector<std::string>& task_ids,
                              const WorldState& world) = 0;
};

/// Evaluates the sufficient goal once, immediately after the terminate
/// signal. Runner errors count as unsatisfied. A crushed object always
/// fails.
bool sufficient_satisfied(const ConceptModel& model, const WorldState& world,
                          const WorldState& task_start,
                          SubsequentRunner& runner);

// ---------------------------------------------------------------------------
// Registry.
// ---------------------------------------------------------------------------

/// Maps task ids to configured concept models plus frozen policy
/// parameters. Immutable during episodes.
class TaskRegistry {
 public:
  void add(const std::string& task_id, ConceptModel model);
  bool contains(const std::string& task_id) const;
  const ConceptModel& at(const std::string& task_id) const;
  std::vector<std::string> task_ids() const;

  void set_policy_params(const std::string& task_id,
                         std::vector<double> params);
  const std::optional<std::vector<double>>& policy_params(
      const std::string& task_id) const;

  /// Creates the task's per-episode policy, applying frozen parameters
  /// when present.
  std::unique_ptr<Policy> make_policy(const std::string& task_id) const;

 private:
  struct Entry {
    ConceptModel model;
    std::optional<std::vector<double>> params;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace taskseq
