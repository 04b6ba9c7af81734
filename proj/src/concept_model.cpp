#include "taskseq/concept_model.hpp"

#include "taskseq/errors.hpp"
#include "taskseq/rng.hpp"

namespace taskseq {

namespace {

struct PatternState {
  bool ee = false;
  bool resting = false;
  bool rigid = false;
};

PatternState target_pattern(const WorldState& w) {
  PatternState s;
  if (w.target_id.empty()) return s;
  s.ee = w.attachment_of(w.target_id, Attachment::Parent::EndEffector) !=
         nullptr;
  s.resting =
      w.attachment_of(w.target_id, Attachment::Parent::EnvironmentResting) !=
      nullptr;
  s.rigid =
      w.attachment_of(w.target_id, Attachment::Parent::EnvironmentRigid) !=
      nullptr;
  return s;
}

bool req_ok(AttachmentPattern::Req req, bool actual) {
  switch (req) {
    case AttachmentPattern::Req::Any: return true;
    case AttachmentPattern::Req::Yes: return actual;
    case AttachmentPattern::Req::No: return !actual;
  }
  return true;
}

}  // namespace

bool AttachmentPattern::matches(const WorldState& w) const {
  const PatternState s = target_pattern(w);
  return req_ok(ee_attached, s.ee) && req_ok(resting, s.resting) &&
         req_ok(rigid, s.rigid);
}

std::string AttachmentPattern::mismatch_reason(const WorldState& w) const {
  const PatternState s = target_pattern(w);
  if (!req_ok(ee_attached, s.ee)) {
    return ee_attached == Req::Yes ? "requires end-effector attachment"
                                   : "requires no end-effector attachment";
  }
  if (!req_ok(resting, s.resting)) {
    return resting == Req::Yes ? "requires a resting attachment"
                               : "requires no resting attachment";
  }
  if (!req_ok(rigid, s.rigid)) {
    return rigid == Req::Yes ? "requires a rigid environment attachment"
                             : "requires no rigid environment attachment";
  }
  return "";
}

bool AttachmentPattern::satisfiable_by(const AttachmentPattern& produced) const {
  auto ok = [](Req need, Req got) {
    if (need == Req::Any) return true;
    return need == got;  // the producer must guarantee it
  };
  return ok(ee_attached, produced.ee_attached) &&
         ok(resting, produced.resting) && ok(rigid, produced.rigid);
}

ResolvedActorConfiguration sample_actor_configuration(const ConceptModel& model,
                                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xac70u}));
  ResolvedActorConfiguration out;
  if (!model.actor_configs.empty()) {
    out.config_index =
        model.actor_configs.size() == 1
            ? 0
            : static_cast<std::size_t>(rng.next_u64() %
                                       model.actor_configs.size());
    const ActorConfiguration& cfg = model.actor_configs[out.config_index];
    for (const auto& actor : cfg.actors) {
      for (const auto& prop : actor.properties) {
        const std::string key = actor.id + "." + prop.name;
        if (prop.range) {
          out.values[key] = rng.uniform(prop.range->first, prop.range->second);
        } else if (prop.value) {
          out.values[key] = *prop.value;
        }
      }
    }
  }
  for (const auto& param : model.parameters) {
    if (param.known) continue;
    if (!param.randomization_range) {
      throw ConfigurationError("unknown parameter '" + param.name +
                               "' lacks a randomization range");
    }
    out.hidden_parameters[param.name] = rng.uniform(
        param.randomization_range->first, param.randomization_range->second);
  }
  return out;
}

WorldState instantiate(const ConceptModel& model,
                       const ResolvedActorConfiguration& config) {
  if (!model.config_provides_initial || !model.build_initial) {
    throw ConfigurationError("model '" + model.id +
                             "' cannot build an initial state from an actor "
                             "configuration");
  }
  return model.build_initial(config);
}

WorldState instantiate(const ConceptModel& model,
                       const WorldState& previous_end_state) {
  if (!model.instantiate_pattern.matches(previous_end_state)) {
    throw IncompatibleStateError(
        "model '" + model.id + "' " +
        model.instantiate_pattern.mismatch_reason(previous_end_state));
  }
  return previous_end_state;
}

double necessary_cost(const ConceptModel& model, const ObservableState& obs) {
  return model.necessary.cost(obs);
}

bool sufficient_satisfied(const ConceptModel& model, const WorldState& world,
                          const WorldState& task_start,
                          SubsequentRunner& runner) {
  for (const auto& [id, obj] : world.objects) {
    if (obj.crushed) return false;
  }
  if (const auto* pred = std::get_if<SufficientPredicate>(&model.sufficient)) {
    const auto cost = pred->bind(task_start);
    return cost(world) <= pred->epsilon;
  }
  const auto& subsequent = std::get<SubsequentTaskGoal>(model.sufficient);
  try {
    return runner.run_subsequent(subsequent.task_ids, world);
  } catch (const std::exception&) {
    return false;  // evaluation failure counts as unsatisfied
  }
}

void TaskRegistry::add(const std::string& task_id, ConceptModel model) {
  entries_[task_id] = Entry{std::move(model), std::nullopt};
}

bool TaskRegistry::contains(const std::string& task_id) const {
  return entries_.count(task_id) != 0;
}

const ConceptModel& TaskRegistry::at(const std::string& task_id) const {
  auto it = entries_.find(task_id);
  if (it == entries_.end()) {
    throw ConfigurationError("unknown task id '" + task_id + "'");
  }
  return it->second.model;
}

std::vector<std::string> TaskRegistry::task_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, _] : entries_) ids.push_back(id);
  return ids;
}

void TaskRegistry::set_policy_params(const std::string& task_id,
                                     std::vector<double> params) {
  auto it = entries_.find(task_id);
  if (it == entries_.end()) {
    throw ConfigurationError("unknown task id '" + task_id + "'");
  }
  const int expected = it->second.model.policy_param_count;
  if (expected != static_cast<int>(params.size())) {
    throw ConfigurationError(
        "task '" + task_id + "' expects " + std::to_string(expected) +
        " policy parameters, got " + std::to_string(params.size()));
  }
  it->second.params = std::move(params);
}

const std::optional<std::vector<double>>& TaskRegistry::policy_params(
    const std::string& task_id) const {
  auto it = entries_.find(task_id);
  if (it == entries_.end()) {
    throw ConfigurationError("unknown task id '" + task_id + "'");
  }
  return it->second.params;
}

std::unique_ptr<Policy> TaskRegistry::make_policy(
    const std::string& task_id) const {
  auto it = entries_.find(task_id);
  if (it == entries_.end()) {
    throw ConfigurationError("unknown task id '" + task_id + "'");
  }
  const Entry& entry = it->second;
  if (!entry.model.make_policy) {
    throw ConfigurationError("task '" + task_id + "' has no policy factory");
  }
  auto policy = entry.model.make_policy();
  if (entry.params) policy->set_params(*entry.params);
  return policy;
}

}  // namespace taskseq
