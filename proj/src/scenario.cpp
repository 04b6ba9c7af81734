#include "taskseq/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "taskseq/errors.hpp"
#include "taskseq/tasks.hpp"

namespace taskseq {

namespace {

struct TextPos {
  int line = 1;
  int column = 1;
};

TextPos pos_of_byte(const std::string& text, std::size_t byte) {
  TextPos pos;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
  }
  return pos;
}

/// Best-effort position of a field name (first quoted occurrence).
TextPos pos_of_key(const std::string& text, const std::string& key) {
  const std::string needle = "\"" + key + "\"";
  const auto at = text.find(needle);
  if (at == std::string::npos) return {1, 1};
  return pos_of_byte(text, at);
}

[[noreturn]] void fail_field(const std::string& text, const std::string& key,
                             const std::string& why) {
  const TextPos pos = pos_of_key(text, key);
  throw ParseError(why, pos.line, pos.column, key);
}

/// Strict-mode guard: every present key must be in the allowed set.
void check_keys(const Json& j, const std::string& text,
                std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      fail_field(text, it.key(),
                 "unknown field '" + it.key() + "' in " + context);
    }
  }
}

double get_number(const Json& j, const std::string& text, const char* key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail_field(text, key, "expected a number");
  return j[key].get<double>();
}

int get_int(const Json& j, const std::string& text, const char* key,
            int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) fail_field(text, key, "expected an integer");
  return j[key].get<int>();
}

std::pair<double, double> get_range(const Json& j, const std::string& text,
                                    const char* key,
                                    std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail_field(text, key, "expected a [lo, hi] range");
  }
  const double lo = v[0].get<double>();
  const double hi = v[1].get<double>();
  if (hi < lo) fail_field(text, key, "range is inverted");
  return {lo, hi};
}

constexpr double kDegree = kPi / 180.0;

const std::map<std::string, std::vector<const char*>>& model_param_keys() {
  static const std::map<std::string, std::vector<const char*>> keys{
      {"grasp",
       {"width_range", "mass", "distance_range", "lateral_range",
        "approach_axis", "max_steps", "subsequent"}},
      {"pick", {"lift_height", "max_steps"}},
      {"bring", {"dx", "dy", "dtheta", "tolerance", "max_steps"}},
      {"place", {"max_steps"}},
      {"release", {"retreat_distance", "max_steps", "region"}},
      {"door_open",
       {"hinge", "radius_range", "initial_angle_deg", "target_angle_deg",
        "angle_epsilon_deg", "arc_step", "max_wrist_force", "handle_width",
        "handle_mass", "grip_aperture", "max_steps"}},
  };
  return keys;
}

bool known_model(const std::string& key) {
  return model_param_keys().count(key) != 0;
}

/// Builds one concept model from its key and scenario overrides.
ConceptModel build_model(const std::string& model_key, const Json& params,
                         const Scenario& scenario) {
  const std::string text = params.dump();
  if (model_key == "grasp") {
    GraspTaskConfig c;
    c.width_range = get_range(params, text, "width_range", c.width_range);
    c.object_mass = get_number(params, text, "mass", c.object_mass);
    c.distance_range = get_range(params, text, "distance_range", c.distance_range);
    c.lateral_range = get_range(params, text, "lateral_range", c.lateral_range);
    c.approach_axis = get_number(params, text, "approach_axis", c.approach_axis);
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    c.aperture_max = scenario.aperture_max;
    if (params.contains("subsequent")) {
      c.subsequent_tasks.clear();
      for (const Json& id : params["subsequent"]) {
        c.subsequent_tasks.push_back(id.get<std::string>());
      }
    }
    return make_grasp_model(c);
  }
  if (model_key == "pick") {
    PickTaskConfig c;
    c.lift_height = get_number(params, text, "lift_height", c.lift_height);
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    return make_pick_model(c);
  }
  if (model_key == "bring") {
    BringTaskConfig c;
    c.dx = get_number(params, text, "dx", c.dx);
    c.dy = get_number(params, text, "dy", c.dy);
    c.dtheta = get_number(params, text, "dtheta", c.dtheta);
    c.tolerance = get_number(params, text, "tolerance", c.tolerance);
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    return make_bring_model(c);
  }
  if (model_key == "place") {
    PlaceTaskConfig c;
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    return make_place_model(c);
  }
  if (model_key == "release") {
    ReleaseTaskConfig c;
    c.retreat_distance =
        get_number(params, text, "retreat_distance", c.retreat_distance);
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    if (params.contains("region")) {
      const Json& r = params["region"];
      check_keys(r, text, {"x", "y", "radius"}, "release region");
      c.region = DropRegion{{get_number(r, text, "x", 0.0),
                             get_number(r, text, "y", 0.0)},
                            get_number(r, text, "radius", 0.0)};
    }
    return make_release_model(c);
  }
  if (model_key == "door_open") {
    DoorTaskConfig c;
    if (params.contains("hinge")) {
      const Json& h = params["hinge"];
      check_keys(h, text, {"x", "y"}, "door hinge");
      c.hinge = {get_number(h, text, "x", c.hinge.x),
                 get_number(h, text, "y", c.hinge.y)};
    }
    c.radius_range = get_range(params, text, "radius_range", c.radius_range);
    c.initial_angle =
        get_number(params, text, "initial_angle_deg", c.initial_angle / kDegree) *
        kDegree;
    c.target_angle =
        get_number(params, text, "target_angle_deg", c.target_angle / kDegree) *
        kDegree;
    c.angle_epsilon =
        get_number(params, text, "angle_epsilon_deg", c.angle_epsilon / kDegree) *
        kDegree;
    c.arc_step = get_number(params, text, "arc_step", c.arc_step);
    c.max_wrist_force =
        get_number(params, text, "max_wrist_force", c.max_wrist_force);
    c.handle_width = get_number(params, text, "handle_width", c.handle_width);
    c.handle_mass = get_number(params, text, "handle_mass", c.handle_mass);
    c.grip_aperture = get_number(params, text, "grip_aperture", c.grip_aperture);
    c.max_steps = get_int(params, text, "max_steps", c.max_steps);
    return make_door_model(c);
  }
  throw ConfigurationError("unknown model key '" + model_key + "'");
}

std::string describe_requirements(const AttachmentPattern& p) {
  using Req = AttachmentPattern::Req;
  std::vector<std::string> parts;
  if (p.ee_attached == Req::Yes) parts.push_back("end-effector attachment");
  if (p.ee_attached == Req::No) parts.push_back("a free end-effector");
  if (p.resting == Req::Yes) parts.push_back("a resting attachment");
  if (p.rigid == Req::Yes) parts.push_back("a rigid environment attachment");
  if (parts.empty()) return "";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += " and " + parts[i];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing.
// ---------------------------------------------------------------------------

Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const TextPos pos = pos_of_byte(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(e.what(), pos.line, pos.column, "");
  }
  if (!j.is_object()) throw ParseError("scenario must be an object", 1, 1, "");

  check_keys(j, text,
             {"version", "seed", "mode", "train_task", "actors", "tasks",
              "sequence", "engines", "reward", "train", "output"},
             "scenario");

  Scenario s;
  s.version = get_int(j, text, "version", 1);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) fail_field(text, "seed", "expected an integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("mode")) {
    const std::string mode = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (mode == "execute") {
      s.mode = SequenceMode::Execute;
    } else if (mode == "train") {
      s.mode = SequenceMode::Train;
    } else {
      fail_field(text, "mode", "mode must be \"execute\" or \"train\"");
    }
  }

  if (j.contains("actors")) {
    const Json& actors = j["actors"];
    check_keys(actors, text, {"end_effector", "distance_sensor"}, "actors");
    if (actors.contains("end_effector")) {
      const Json& ee = actors["end_effector"];
      check_keys(ee, text, {"aperture_max"}, "actors.end_effector");
      s.aperture_max = get_number(ee, text, "aperture_max", s.aperture_max);
    }
    if (actors.contains("distance_sensor")) {
      const Json& ds = actors["distance_sensor"];
      check_keys(ds, text, {"sigma_d"}, "actors.distance_sensor");
      s.sigma_d = get_number(ds, text, "sigma_d", s.sigma_d);
    }
  }

  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) fail_field(text, "tasks", "expected an array");
    for (const Json& jt : j["tasks"]) {
      check_keys(jt, text, {"id", "model", "params", "params_file"}, "task");
      TaskSpec spec;
      if (!jt.contains("id") || !jt["id"].is_string()) {
        fail_field(text, "id", "every task needs a string id");
      }
      spec.id = jt["id"].get<std::string>();
      if (!jt.contains("model") || !jt["model"].is_string()) {
        fail_field(text, "model", "task '" + spec.id + "' needs a model key");
      }
      spec.model = jt["model"].get<std::string>();
      if (jt.contains("params")) {
        if (!jt["params"].is_object()) {
          fail_field(text, "params", "task params must be an object");
        }
        spec.params = jt["params"];
        if (known_model(spec.model)) {
          const auto& allowed = model_param_keys().at(spec.model);
          for (auto it = spec.params.begin(); it != spec.params.end(); ++it) {
            bool ok = false;
            for (const char* a : allowed) {
              if (it.key() == a) {
                ok = true;
                break;
              }
            }
            if (!ok) {
              fail_field(text, it.key(),
                         "unknown parameter '" + it.key() + "' for model '" +
                             spec.model + "'");
            }
          }
        }
      }
      if (jt.contains("params_file")) {
        spec.params_file = jt["params_file"].get<std::string>();
      }
      for (const TaskSpec& prev : s.tasks) {
        if (prev.id == spec.id) {
          fail_field(text, spec.id, "duplicate task id '" + spec.id + "'");
        }
      }
      s.tasks.push_back(std::move(spec));
    }
  }

  if (j.contains("sequence")) {
    if (!j["sequence"].is_array()) fail_field(text, "sequence", "expected an array");
    for (const Json& id : j["sequence"]) {
      if (!id.is_string()) fail_field(text, "sequence", "sequence entries must be task ids");
      s.sequence.push_back(id.get<std::string>());
    }
  }
  for (const std::string& id : s.sequence) {
    bool found = false;
    for (const TaskSpec& t : s.tasks) found |= (t.id == id);
    if (!found) {
      fail_field(text, id, "sequence references undefined task '" + id + "'");
    }
  }

  if (s.mode == SequenceMode::Train) {
    if (!j.contains("train_task") || !j["train_task"].is_string()) {
      fail_field(text, "mode", "train mode requires a train_task");
    }
    s.train_task = j["train_task"].get<std::string>();
    bool in_sequence = false;
    for (const std::string& id : s.sequence) in_sequence |= (id == s.train_task);
    if (!in_sequence) {
      fail_field(text, "train_task",
                 "train_task '" + s.train_task + "' is not in the sequence");
    }
  } else if (j.contains("train_task")) {
    fail_field(text, "train_task", "train_task is only valid in train mode");
  }

  if (j.contains("engines")) {
    const Json& engines = j["engines"];
    check_keys(engines, text, {"kinematics", "physics", "feature", "postprocess"},
               "engines");
    for (auto it = engines.begin(); it != engines.end(); ++it) {
      const EngineRole role = engine_role_from_name(it.key());
      EngineBackendSpec backend;
      if (it.value().is_string()) {
        const std::string kind = it.value().get<std::string>();
        if (kind == "local") {
          backend.remote = false;
        } else {
          fail_field(text, it.key(),
                     "engine backend must be \"local\" or {backend: remote}");
        }
      } else if (it.value().is_object()) {
        check_keys(it.value(), text, {"backend", "endpoint"}, "engine backend");
        const std::string kind = it.value().value("backend", "");
        if (kind == "remote") {
          backend.remote = true;
          backend.endpoint = it.value().value("endpoint", "");
        } else if (kind == "local") {
          backend.remote = false;
        } else {
          fail_field(text, it.key(), "backend must be \"local\" or \"remote\"");
        }
      } else {
        fail_field(text, it.key(), "bad engine backend");
      }
      s.engines[role] = backend;
    }
  }

  if (j.contains("reward")) {
    const Json& r = j["reward"];
    check_keys(r, text, {"alpha", "step_cost", "bonus", "penalty"}, "reward");
    s.reward.alpha = get_number(r, text, "alpha", s.reward.alpha);
    s.reward.step_cost = get_number(r, text, "step_cost", s.reward.step_cost);
    s.reward.bonus = get_number(r, text, "bonus", s.reward.bonus);
    s.reward.penalty = get_number(r, text, "penalty", s.reward.penalty);
  }

  if (j.contains("train")) {
    const Json& t = j["train"];
    check_keys(t, text,
               {"population", "elite_fraction", "iterations",
                "episodes_per_candidate", "init_sigma", "sigma_floor"},
               "train");
    s.train.population = get_int(t, text, "population", s.train.population);
    s.train.elite_fraction =
        get_number(t, text, "elite_fraction", s.train.elite_fraction);
    s.train.iterations = get_int(t, text, "iterations", s.train.iterations);
    s.train.episodes_per_candidate = get_int(t, text, "episodes_per_candidate",
                                             s.train.episodes_per_candidate);
    s.train.init_sigma = get_number(t, text, "init_sigma", s.train.init_sigma);
    s.train.sigma_floor = get_number(t, text, "sigma_floor", s.train.sigma_floor);
  }
  s.train.seed = s.seed;

  if (j.contains("output")) {
    const Json& o = j["output"];
    check_keys(o, text, {"dir"}, "output");
    if (o.contains("dir")) s.output.dir = o["dir"].get<std::string>();
  }

  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Scenario s = parse_scenario(buffer.str());
  s.base_dir = path.has_parent_path() ? path.parent_path()
                                      : std::filesystem::path(".");
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  Json j;
  j["version"] = s.version;
  j["seed"] = s.seed;
  j["mode"] = s.mode == SequenceMode::Train ? "train" : "execute";
  if (s.mode == SequenceMode::Train) j["train_task"] = s.train_task;
  j["actors"] = Json{{"end_effector", Json{{"aperture_max", s.aperture_max}}},
                     {"distance_sensor", Json{{"sigma_d", s.sigma_d}}}};
  Json tasks = Json::array();
  for (const TaskSpec& t : s.tasks) {
    Json jt{{"id", t.id}, {"model", t.model}};
    if (!t.params.empty()) jt["params"] = t.params;
    if (!t.params_file.empty()) jt["params_file"] = t.params_file;
    tasks.push_back(std::move(jt));
  }
  j["tasks"] = std::move(tasks);
  j["sequence"] = s.sequence;
  Json engines = Json::object();
  for (const auto& [role, backend] : s.engines) {
    if (backend.remote) {
      engines[engine_role_name(role)] =
          Json{{"backend", "remote"}, {"endpoint", backend.endpoint}};
    } else {
      engines[engine_role_name(role)] = "local";
    }
  }
  j["engines"] = std::move(engines);
  j["reward"] = Json{{"alpha", s.reward.alpha},
                     {"step_cost", s.reward.step_cost},
                     {"bonus", s.reward.bonus},
                     {"penalty", s.reward.penalty}};
  j["train"] = Json{{"population", s.train.population},
                    {"elite_fraction", s.train.elite_fraction},
                    {"iterations", s.train.iterations},
                    {"episodes_per_candidate", s.train.episodes_per_candidate},
                    {"init_sigma", s.train.init_sigma},
                    {"sigma_floor", s.train.sigma_floor}};
  j["output"] = Json{{"dir", s.output.dir}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------

std::vector<Diagnostic> validate_scenario(const Scenario& s) {
  std::vector<Diagnostic> out;

  std::map<std::string, ConceptModel> models;
  for (const TaskSpec& t : s.tasks) {
    if (!known_model(t.model)) {
      out.push_back({t.id, "unknown model key '" + t.model + "'"});
      continue;
    }
    try {
      models.emplace(t.id, build_model(t.model, t.params, s));
    } catch (const std::exception& e) {
      out.push_back({t.id, e.what()});
    }
  }

  // Sequence compatibility: each task's declared initial pattern must be
  // producible by its predecessor (or by its own actor configuration for
  // the first task).
  const AttachmentPattern* produced = nullptr;
  for (std::size_t i = 0; i < s.sequence.size(); ++i) {
    const std::string& id = s.sequence[i];
    auto it = models.find(id);
    if (it == models.end()) break;  // already diagnosed
    const ConceptModel& model = it->second;
    if (i == 0) {
      if (!model.config_provides_initial) {
        const std::string need = describe_requirements(model.requires_pattern);
        if (!need.empty()) {
          out.push_back({id, id + " requires " + need +
                                 ", but no task precedes it and its model "
                                 "provides no initial configuration"});
        }
      }
    } else if (produced != nullptr &&
               !model.requires_pattern.satisfiable_by(*produced)) {
      out.push_back({id, id + " requires " +
                             describe_requirements(model.requires_pattern) +
                             ", which '" + s.sequence[i - 1] +
                             "' does not guarantee"});
    }
    produced = &model.produces_pattern;
  }

  // Subsequent-task references must resolve.
  for (const auto& [id, model] : models) {
    if (const auto* goal = std::get_if<SubsequentTaskGoal>(&model.sufficient)) {
      for (const std::string& sub : goal->task_ids) {
        bool found = false;
        for (const TaskSpec& t : s.tasks) found |= (t.id == sub);
        if (!found) {
          out.push_back({id, "subsequent task '" + sub + "' is not defined"});
        }
      }
    }
  }

  if (s.mode == SequenceMode::Train) {
    auto it = models.find(s.train_task);
    if (it != models.end() && it->second.policy_param_count == 0) {
      out.push_back({s.train_task,
                     "train_task '" + s.train_task + "' has no trainable policy"});
    }
  }

  for (const auto& [role, backend] : s.engines) {
    if (!backend.remote) continue;
    try {
      parse_endpoint(backend.endpoint);
    } catch (const std::exception& e) {
      out.push_back({"", std::string("engine ") + engine_role_name(role) + ": " +
                             e.what()});
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// Runtime assembly.
// ---------------------------------------------------------------------------

TaskRegistry build_registry(const Scenario& s) {
  TaskRegistry registry;
  for (const TaskSpec& t : s.tasks) {
    registry.add(t.id, build_model(t.model, t.params, s));
    if (!t.params_file.empty()) {
      const std::filesystem::path path = s.base_dir / t.params_file;
      std::ifstream in(path);
      if (!in) throw Error("cannot open params file: " + path.string());
      std::stringstream buffer;
      buffer << in.rdbuf();
      const PolicyParamsFile file = decode_policy_params(buffer.str());
      const ConceptModel& model = registry.at(t.id);
      if (file.family != model.policy_family ||
          file.dim != model.policy_param_count) {
        throw ConfigurationError(
            "params file '" + path.string() + "' holds family '" + file.family +
            "' dim " + std::to_string(file.dim) + ", but task '" + t.id +
            "' declares '" + model.policy_family + "' dim " +
            std::to_string(model.policy_param_count));
      }
      registry.set_policy_params(t.id, file.params);
    }
  }
  return registry;
}

std::unique_ptr<EnginePipeline> build_pipeline(const Scenario& s) {
  PipelineSettings settings;
  settings.sigma_d = s.sigma_d;
  std::vector<std::unique_ptr<Engine>> engines;
  for (EngineRole role : {EngineRole::Kinematics, EngineRole::Physics,
                          EngineRole::Feature, EngineRole::PostProcess}) {
    auto it = s.engines.find(role);
    if (it != s.engines.end() && it->second.remote) {
      const Endpoint ep = parse_endpoint(it->second.endpoint);
      engines.push_back(std::make_unique<RemoteEngine>(role, ep.host, ep.port));
    } else {
      engines.push_back(make_local_engine(role));
    }
  }
  return std::make_unique<EnginePipeline>(std::move(engines), settings);
}

TaskSequence scenario_sequence(const Scenario& s) {
  TaskSequence seq;
  seq.task_ids = s.sequence;
  seq.mode = s.mode;
  if (s.mode == SequenceMode::Train) {
    for (std::size_t i = 0; i < s.sequence.size(); ++i) {
      if (s.sequence[i] == s.train_task) {
        seq.train_index = static_cast<int>(i);
      }
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Policy parameter files.
// ---------------------------------------------------------------------------

std::string encode_policy_params(const PolicyParamsFile& p) {
  Json params = Json::array();
  for (double v : p.params) params.push_back(encode_double(v));
  return Json{{"family", p.family},
              {"dim", p.dim},
              {"model", p.model},
              {"params", std::move(params)}}
             .dump() +
         "\n";
}

PolicyParamsFile decode_policy_params(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MalformedStateError(std::string("params file: ") + e.what(), e.byte);
  }
  PolicyParamsFile p;
  p.family = j.at("family").get<std::string>();
  p.dim = j.at("dim").get<int>();
  p.model = j.at("model").get<std::string>();
  for (const Json& v : j.at("params")) {
    p.params.push_back(decode_double(v.get<std::string>()));
  }
  if (static_cast<int>(p.params.size()) != p.dim) {
    throw MalformedStateError("params file dim mismatch", 0);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Log rendering.
// ---------------------------------------------------------------------------

std::string render_trajectory_log(const EpisodeResult& result,
                                  const TaskRegistry& registry) {
  std::string out;
  for (const StepLog& log : result.trajectory) {
    out += step_log_to_json(log).dump();
    out += "\n";
  }
  Json tasks = Json::array();
  for (const TaskBoundary& b : result.boundaries) {
    Json diag = Json::object();
    for (const auto& [k, v] : b.diagnostics) diag[k] = encode_double(v);
    std::string goal = "n/a";
    const ConceptModel& model = registry.at(b.task_id);
    if (const auto* pred = std::get_if<SufficientPredicate>(&model.sufficient)) {
      goal = pred->bind(b.start_world)(b.end_world) <= pred->epsilon
                 ? "satisfied"
                 : "unsatisfied";
    }
    tasks.push_back(Json{{"id", b.task_id},
                         {"terminated", b.terminated},
                         {"goal", goal},
                         {"diagnostics", std::move(diag)}});
  }
  Json summary{{"outcome", outcome_kind_name(result.outcome.kind)},
               {"failed_task", result.outcome.task_id},
               {"detail", result.outcome.detail},
               {"return", encode_double(result.episode_return)},
               {"tasks", std::move(tasks)},
               {"goals_satisfied", all_task_goals_satisfied(result, registry)}};
  out += Json{{"summary", std::move(summary)}}.dump();
  out += "\n";
  return out;
}

std::string render_metrics_log(const TrainReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const IterationStats& it = report.iterations[i];
    Json mean = Json::array();
    Json sigma = Json::array();
    for (double v : it.param_mean) mean.push_back(encode_double(v));
    for (double v : it.param_sigma) sigma.push_back(encode_double(v));
    out += Json{{"iteration", i},
                {"mean_return", encode_double(it.mean_return)},
                {"best_return", encode_double(it.best_return)},
                {"best_so_far", encode_double(it.best_so_far)},
                {"param_mean", std::move(mean)},
                {"param_sigma", std::move(sigma)}}
               .dump();
    out += "\n";
  }
  Json params = Json::array();
  for (double v : report.final_params) params.push_back(encode_double(v));
  out += Json{{"final",
               Json{{"iterations", report.iterations.size()},
                    {"best_return", encode_double(report.best_return)},
                    {"params", std::move(params)}}}}
             .dump();
  out += "\n";
  return out;
}

}  // namespace taskseq
