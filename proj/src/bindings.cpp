#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "taskseq/learning.hpp"
#include "taskseq/scenario.hpp"
#include "taskseq/tasks.hpp"
#include "taskseq/wire.hpp"

namespace py = pybind11;
using namespace taskseq;

namespace {

/// Owns everything an episode needs, so Python holds a single handle.
struct SimulatorHandle {
  Scenario scenario;
  TaskRegistry registry;
  std::unique_ptr<EnginePipeline> pipeline;

  explicit SimulatorHandle(const std::string& text)
      : scenario(parse_scenario(text)),
        registry(build_registry(scenario)),
        pipeline(build_pipeline(scenario)) {}
};

struct PyTrainingEnv {
  std::shared_ptr<SimulatorHandle> sim;
  std::unique_ptr<TrainingEnv> env;

  explicit PyTrainingEnv(const std::string& scenario_text)
      : sim(std::make_shared<SimulatorHandle>(scenario_text)) {
    env = std::make_unique<TrainingEnv>(scenario_sequence(sim->scenario),
                                        sim->registry, *sim->pipeline,
                                        sim->scenario.reward);
  }
};

py::dict outcome_dict(const EpisodeResult& result, const TaskRegistry& registry) {
  py::dict d;
  d["outcome"] = outcome_kind_name(result.outcome.kind);
  d["failed_task"] = result.outcome.task_id;
  d["detail"] = result.outcome.detail;
  d["steps"] = result.trajectory.size();
  d["return"] = result.episode_return;
  d["goals_satisfied"] = all_task_goals_satisfied(result, registry);
  py::list tasks;
  for (const TaskBoundary& b : result.boundaries) {
    py::dict t;
    t["id"] = b.task_id;
    t["terminated"] = b.terminated;
    t["diagnostics"] = b.diagnostics;
    tasks.append(t);
  }
  d["tasks"] = tasks;
  return d;
}

Command command_from_sequence(const std::vector<double>& v) {
  if (v.size() != 5) {
    throw py::value_error(
        "command must be [dx, dy, dtheta, aperture_delta, lift_delta]");
  }
  return Command{v[0], v[1], v[2], v[3], v[4]};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Task-sequencing manipulation simulator core";

  py::register_exception<Error>(m, "TaskseqError");

  py::class_<Pose2>(m, "Pose2")
      .def(py::init<>())
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"),
           py::arg("theta") = 0.0)
      .def_readwrite("x", &Pose2::x)
      .def_readwrite("y", &Pose2::y)
      .def_readwrite("theta", &Pose2::theta)
      .def("__repr__", [](const Pose2& p) {
        return "Pose2(" + std::to_string(p.x) + ", " + std::to_string(p.y) +
               ", " + std::to_string(p.theta) + ")";
      });

  m.def("compose_pose", &compose_pose, py::arg("a"), py::arg("b"));
  m.def("wrap_angle", &wrap_angle, py::arg("angle"));

  m.def(
      "forward_kinematics",
      [](const std::vector<double>& q) {
        if (q.size() != 3) throw py::value_error("expected 3 joint angles");
        return forward_kinematics(JointVector{{q[0], q[1], q[2]}});
      },
      py::arg("joints"));
  m.def(
      "inverse_kinematics",
      [](const Pose2& target, const std::vector<double>& seed) {
        JointVector s{{0.0, 0.0, 0.0}};
        if (!seed.empty()) {
          if (seed.size() != 3) throw py::value_error("expected 3 joint angles");
          s = JointVector{{seed[0], seed[1], seed[2]}};
        }
        const JointVector q = inverse_kinematics(target, s);
        return std::vector<double>{q.q[0], q.q[1], q.q[2]};
      },
      py::arg("target"), py::arg("seed") = std::vector<double>{});
  m.def("grip_force", &grip_force, py::arg("object_width"), py::arg("aperture"));
  m.def(
      "physics_step",
      [](const std::string& state, const std::vector<double>& command) {
        return encode_state(physics_step(decode_state(state),
                                         command_from_sequence(command)));
      },
      py::arg("state"), py::arg("command"),
      "Applies one physics step to a hex-float encoded state.");

  m.def("encode_double", &encode_double, py::arg("value"));
  m.def("decode_double", &decode_double, py::arg("text"));

  m.def(
      "validate_scenario",
      [](const std::string& text) {
        const Scenario s = parse_scenario(text);
        std::vector<std::string> out;
        for (const Diagnostic& d : validate_scenario(s)) {
          out.push_back(d.task_id.empty() ? d.message
                                          : d.task_id + ": " + d.message);
        }
        return out;
      },
      py::arg("scenario_text"));

  m.def(
      "run_scenario",
      [](const std::string& text, std::optional<std::uint64_t> seed) {
        SimulatorHandle sim(text);
        if (seed) sim.scenario.seed = *seed;
        SequenceRunner runner(sim.registry, *sim.pipeline, sim.scenario.reward);
        const EpisodeResult result = runner.run_sequence(
            scenario_sequence(sim.scenario), std::nullopt, sim.scenario.seed);
        return outcome_dict(result, sim.registry);
      },
      py::arg("scenario_text"), py::arg("seed") = std::nullopt,
      "Runs one execute-mode episode and returns the outcome summary.");

  m.def(
      "evaluate_scenario",
      [](const std::string& text, const std::vector<double>& params,
         const std::string& task_id, int n_episodes, std::uint64_t seed) {
        SimulatorHandle sim(text);
        return evaluate(params, task_id, scenario_sequence(sim.scenario),
                        sim.registry, *sim.pipeline, n_episodes, seed,
                        sim.scenario.reward);
      },
      py::arg("scenario_text"), py::arg("params"), py::arg("task_id"),
      py::arg("n_episodes"), py::arg("seed"),
      "Success rate of `params` over seeded execute episodes.");

  py::class_<PyTrainingEnv>(m, "TrainingEnv")
      .def(py::init<const std::string&>(), py::arg("scenario_text"))
      .def_property_readonly(
          "param_dim", [](PyTrainingEnv& e) { return e.env->param_dim(); })
      .def_property_readonly(
          "train_task", [](PyTrainingEnv& e) { return e.env->train_task_id(); })
      .def(
          "set_candidate_params",
          [](PyTrainingEnv& e, const std::vector<double>& p) {
            e.env->set_candidate_params(p);
          },
          py::arg("params"))
      .def(
          "reset",
          [](PyTrainingEnv& e, std::uint64_t seed) {
            const Observation obs = e.env->reset(seed);
            return std::vector<double>(obs.begin(), obs.end());
          },
          py::arg("seed"))
      .def(
          "step",
          [](PyTrainingEnv& e, const std::vector<double>& command,
             bool terminate) {
            const TrainingEnv::StepResult r =
                e.env->step({command_from_sequence(command), terminate});
            return py::make_tuple(
                std::vector<double>(r.observation.begin(), r.observation.end()),
                r.reward, r.done);
          },
          py::arg("command"), py::arg("terminate") = false,
          "Advances one pipeline step; returns (observation, reward, done).")
      .def("act",
           [](PyTrainingEnv& e) {
             const ActionDecision d = e.env->policy().act(
                 e.env->observation(), e.env->observable(), nullptr);
             return py::make_tuple(
                 std::vector<double>{d.command.dx, d.command.dy,
                                     d.command.dtheta, d.command.aperture_delta,
                                     d.command.lift_delta},
                 d.terminate);
           })
      .def_property_readonly("done",
                             [](PyTrainingEnv& e) { return e.env->done(); })
      .def_property_readonly(
          "episode_return",
          [](PyTrainingEnv& e) { return e.env->episode_return(); });

  m.def(
      "cem_train_scenario",
      [](const std::string& text, int workers) {
        const Scenario scenario = parse_scenario(text);
        const TaskSequence seq = scenario_sequence(scenario);
        TaskRegistry probe = build_registry(scenario);
        const int dim = probe.at(scenario.train_task).policy_param_count;

        std::vector<std::shared_ptr<SimulatorHandle>> stacks;
        EnvFactory factory = [&]() {
          auto sim = std::make_shared<SimulatorHandle>(text);
          stacks.push_back(sim);
          return std::make_unique<TrainingEnv>(seq, sim->registry,
                                               *sim->pipeline, scenario.reward,
                                               false);
        };
        TrainConfig config = scenario.train;
        config.workers = workers;
        const TrainReport report = cem_train(factory, dim, config);
        py::dict d;
        d["final_params"] = report.final_params;
        d["best_params"] = report.best_params;
        d["best_return"] = report.best_return;
        d["iterations"] = report.iterations.size();
        d["wall_seconds"] = report.wall_seconds;
        return d;
      },
      py::arg("scenario_text"), py::arg("workers") = 1,
      "Trains the scenario's train_task with CEM; returns the report.");

  m.def("hand_built_grasp_params", &hand_built_grasp_params);

  m.def(
      "serve_engine",
      [](const std::string& role, int port) {
        auto server = std::make_shared<EngineServer>(
            make_local_engine(engine_role_from_name(role)), port);
        server->start();
        return py::make_tuple(server->port(),
                              py::capsule(new std::shared_ptr<EngineServer>(server),
                                          [](void* p) {
                                            auto* sp = static_cast<
                                                std::shared_ptr<EngineServer>*>(p);
                                            (*sp)->stop();
                                            delete sp;
                                          }));
      },
      py::arg("role"), py::arg("port") = 0,
      "Hosts one engine role in a background thread; returns (port, handle).");
}
