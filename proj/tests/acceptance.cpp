// Acceptance suite: runs every acceptance criterion end to end and
// prints one PASS/FAIL line per criterion. Exit code = failure count.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "taskseq/codec.hpp"
#include "taskseq/learning.hpp"
#include "taskseq/rng.hpp"
#include "taskseq/scenario.hpp"
#include "taskseq/sequencer.hpp"
#include "taskseq/tasks.hpp"
#include "taskseq/wire.hpp"

using namespace taskseq;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("%s  criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

fs::path scenario_dir() { return TASKSEQ_SCENARIO_DIR; }

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("taskseq_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

double elapsed_seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// Success rate of a scenario file over held-out seeds, using the
/// parameters already referenced by the file.
double evaluate_file(const fs::path& scenario_file, int n, std::uint64_t seed) {
  const Scenario s = load_scenario_file(scenario_file);
  const TaskRegistry registry = build_registry(s);
  auto pipeline = build_pipeline(s);
  return evaluate({}, "", scenario_sequence(s), registry, *pipeline, n, seed,
                  s.reward);
}

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;

  bool start(int listen_port) {
    port = listen_port;
    pid = fork();
    if (pid == 0) {
      const std::string port_text = std::to_string(listen_port);
      execl(TASKSEQ_CLI_PATH, "taskseq", "serve-engine", "--role", "physics",
            "--port", port_text.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    // Wait until the server accepts connections.
    for (int i = 0; i < 100; ++i) {
      try {
        WireClient probe("127.0.0.1", port);
        probe.info();
        return true;
      } catch (const Error&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
    return false;
  }

  ~ServerProcess() {
    if (pid > 0) {
      kill(pid, SIGTERM);
      int status = 0;
      waitpid(pid, &status, 0);
    }
  }
};

// ---------------------------------------------------------------------------
// Criterion 1: grasp training.
// ---------------------------------------------------------------------------

std::vector<double> g_trained_params;
fs::path g_trained_params_file;

void criterion_1() {
  const fs::path dir = work_dir() / "c1";
  const fs::path file = dir / "grasp_train.json";
  fs::create_directories(dir);
  fs::copy_file(scenario_dir() / "grasp_train.json", file,
                fs::copy_options::overwrite_existing);

  const fs::path out1 = dir / "out1";
  const fs::path out4 = dir / "out4";
  int rc1 = -1, rc4 = -1;
  const double secs1 = elapsed_seconds([&] {
    rc1 = run_command({"train", file.string(), "--workers", "1", "--out",
                       out1.string(), "--log-level", "quiet"});
  });
  const double secs4 = elapsed_seconds([&] {
    rc4 = run_command({"train", file.string(), "--workers", "4", "--out",
                       out4.string(), "--log-level", "quiet"});
  });

  const bool same_bytes =
      read_file(out1 / "policy.params") == read_file(out4 / "policy.params");

  const PolicyParamsFile trained =
      decode_policy_params(read_file(out1 / "policy.params"));
  g_trained_params = trained.params;
  g_trained_params_file = out1 / "policy.params";

  // Held-out evaluation on the training scenario's configuration.
  const Scenario s = load_scenario_file(file);
  const TaskRegistry registry = build_registry(s);
  auto pipeline = build_pipeline(s);
  const TaskSequence exec{{"grasp", "pick"}, SequenceMode::Execute, 0};
  const double rate = evaluate(g_trained_params, "grasp", exec, registry,
                               *pipeline, 100, 31337, s.reward);

  const std::vector<double> zeros(24, 0.0);
  const double zero_rate =
      evaluate(zeros, "grasp", exec, registry, *pipeline, 50, 31337, s.reward);

  Rng rng(123);
  double baseline = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(24);
    for (double& v : p) v = rng.gaussian();
    baseline += evaluate(p, "grasp", exec, registry, *pipeline, 4,
                         777 + static_cast<std::uint64_t>(i), s.reward);
  }
  baseline /= 100.0;

  const bool pass = rc1 == 0 && rc4 == 0 && same_bytes && rate >= 0.90 &&
                    zero_rate == 0.0 && baseline <= 0.40 && secs1 <= 600.0 &&
                    secs4 <= 180.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "success %.2f (>=0.90), zero %.2f, random baseline %.2f "
                "(<=0.40), train %.0fs single-core (<=600), %.0fs 4-worker "
                "(<=180), worker-count invariant %s",
                rate, zero_rate, baseline, secs1, secs4,
                same_bytes ? "yes" : "NO");
  report(1, "grasp training reaches 0.90 success", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: actor-configuration reuse.
// ---------------------------------------------------------------------------

void criterion_2() {
  const fs::path dir = work_dir() / "c2";
  const fs::path file = dir / "grasp_train_small_gripper.json";
  fs::create_directories(dir);
  fs::copy_file(scenario_dir() / "grasp_train_small_gripper.json", file,
                fs::copy_options::overwrite_existing);
  const fs::path out = dir / "out";

  // Same command, different file; no code changes anywhere.
  const int rc = run_command({"train", file.string(), "--workers", "1", "--out",
                              out.string(), "--log-level", "quiet"});
  double rate = 0.0;
  if (rc == 0) {
    const PolicyParamsFile trained =
        decode_policy_params(read_file(out / "policy.params"));
    const Scenario s = load_scenario_file(file);
    const TaskRegistry registry = build_registry(s);
    auto pipeline = build_pipeline(s);
    const TaskSequence exec{{"grasp", "pick"}, SequenceMode::Execute, 0};
    rate = evaluate(trained.params, "grasp", exec, registry, *pipeline, 100,
                    31337, s.reward);
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "aperture_max 0.10, widths [0.03,0.08]: success %.2f (>=0.90)",
                rate);
  report(2, "gripper reconfiguration retrains with zero code changes",
         rc == 0 && rate >= 0.90, detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: door opening.
// ---------------------------------------------------------------------------

void criterion_3() {
  const Scenario s = load_scenario_file(scenario_dir() / "door_open.json");
  const TaskRegistry registry = build_registry(s);
  auto pipeline = build_pipeline(s);
  SequenceRunner runner(registry, *pipeline, s.reward);
  const TaskSequence seq = scenario_sequence(s);

  int good = 0;
  bool cost_clean = true;
  const double target = 60.0 * kPi / 180.0;
  for (int e = 0; e < 100; ++e) {
    const EpisodeResult r = runner.run_sequence(
        seq, std::nullopt, derive_seed(s.seed, {0xacce, (unsigned)e}));
    if (r.outcome.kind != OutcomeKind::Success) continue;
    const TaskBoundary& b = r.boundaries[0];
    const Attachment* hinge = b.end_world.attachment_of(
        "handle", Attachment::Parent::EnvironmentRigid);
    const ObjectState& handle = b.end_world.objects.at("handle");
    const double angle =
        wrap_angle(std::atan2(handle.pose.y - hinge->hinge.y,
                              handle.pose.x - hinge->hinge.x) -
                   hinge->hinge.theta);
    const bool angle_ok =
        std::fabs(wrap_angle(angle - target)) <= 2.0 * kPi / 180.0;
    const double true_radius = hinge->radius;
    const bool radius_ok =
        std::fabs(b.diagnostics.at("radius_est") - true_radius) / true_radius <
        0.01;
    for (std::size_t i = 3; i < r.trajectory.size(); ++i) {
      if (r.trajectory[i].necessary_cost != 0.0) cost_clean = false;
    }
    if (angle_ok && radius_ok) ++good;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "angle within 2deg and radius error <1%% on %d/100 (>=95), "
                "wrist <=15N after bootstrap on every step: %s",
                good, cost_clean ? "yes" : "NO");
  report(3, "door opening under randomized hinge radius", good >= 95 && cost_clean,
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: learning-to-execution handoff.
// ---------------------------------------------------------------------------

fs::path g_five_task_file;

void criterion_4() {
  const fs::path dir = work_dir() / "c4";
  fs::create_directories(dir);
  // The frozen policy file is used byte-for-byte, no retraining.
  fs::copy_file(g_trained_params_file, dir / "grasp_reference.params",
                fs::copy_options::overwrite_existing);
  const bool byte_identical = read_file(g_trained_params_file) ==
                              read_file(dir / "grasp_reference.params");
  fs::copy_file(scenario_dir() / "five_task.json", dir / "five_task.json",
                fs::copy_options::overwrite_existing);
  g_five_task_file = dir / "five_task.json";

  const double rate = evaluate_file(g_five_task_file, 100, 98765);
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "5-task success %.2f (>=0.85), policy file byte-identical %s",
                rate, byte_identical ? "yes" : "NO");
  report(4, "frozen grasp policy runs the full five-task sequence",
         byte_identical && rate >= 0.85, detail);
}

// ---------------------------------------------------------------------------
// Criterion 5: recomposition.
// ---------------------------------------------------------------------------

void criterion_5() {
  const fs::path dir = work_dir() / "c5";
  fs::create_directories(dir);
  fs::copy_file(g_trained_params_file, dir / "grasp_reference.params",
                fs::copy_options::overwrite_existing);
  for (const char* name : {"pick_and_place.json", "pick_and_throw.json"}) {
    fs::copy_file(scenario_dir() / name, dir / name,
                  fs::copy_options::overwrite_existing);
  }
  const double place = evaluate_file(dir / "pick_and_place.json", 100, 2468);
  const double toss = evaluate_file(dir / "pick_and_throw.json", 100, 2468);
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "pick-and-place %.2f, pick-and-throw %.2f (both >=0.85), same "
                "blocks, different files",
                place, toss);
  report(5, "scenario recomposition reuses the same blocks", place >= 0.85 && toss >= 0.85,
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: backend transparency.
// ---------------------------------------------------------------------------

void criterion_6() {
  const fs::path dir = work_dir() / "c6";
  fs::create_directories(dir);
  fs::copy_file(g_trained_params_file, dir / "grasp_reference.params",
                fs::copy_options::overwrite_existing);

  Scenario s = load_scenario_file(g_five_task_file);
  s.base_dir = dir;
  s.output.dir = (dir / "local").string();
  const fs::path local_file = dir / "five_task_local.json";
  write_file(local_file, serialize_scenario(s));

  const int port = 17471;
  ServerProcess server;
  if (!server.start(port)) {
    report(6, "local vs remote physics trajectories", false,
           "serve-engine did not come up");
    return;
  }
  s.engines[EngineRole::Physics] =
      EngineBackendSpec{true, "127.0.0.1:" + std::to_string(port)};
  s.output.dir = (dir / "remote").string();
  const fs::path remote_file = dir / "five_task_remote.json";
  write_file(remote_file, serialize_scenario(s));

  const int rc_local =
      run_command({"run", local_file.string(), "--log-level", "quiet"});
  const int rc_remote =
      run_command({"run", remote_file.string(), "--log-level", "quiet"});
  const std::string log_local = read_file(dir / "local" / "trajectory.log");
  const std::string log_remote = read_file(dir / "remote" / "trajectory.log");
  const bool identical = !log_local.empty() && log_local == log_remote;
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "exit %d/%d, %zu bytes, byte-identical %s", rc_local, rc_remote,
                log_local.size(), identical ? "yes" : "NO");
  report(6, "local vs remote physics trajectories", rc_local == 0 &&
             rc_remote == 0 && identical,
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 7: determinism of run and train outputs.
// ---------------------------------------------------------------------------

void criterion_7() {
  const fs::path dir = work_dir() / "c7";
  fs::create_directories(dir);

  // run: the same scenario twice, byte-identical trajectory.
  Scenario door = load_scenario_file(scenario_dir() / "door_open.json");
  door.output.dir = (dir / "run_a").string();
  write_file(dir / "door_a.json", serialize_scenario(door));
  door.output.dir = (dir / "run_b").string();
  write_file(dir / "door_b.json", serialize_scenario(door));
  const int ra =
      run_command({"run", (dir / "door_a.json").string(), "--log-level", "quiet"});
  const int rb =
      run_command({"run", (dir / "door_b.json").string(), "--log-level", "quiet"});
  const bool run_same = ra == 0 && rb == 0 &&
                        read_file(dir / "run_a" / "trajectory.log") ==
                            read_file(dir / "run_b" / "trajectory.log");

  // train: a reduced training twice, byte-identical metrics and params.
  Scenario train = load_scenario_file(scenario_dir() / "grasp_train.json");
  train.train.population = 16;
  train.train.iterations = 5;
  train.train.episodes_per_candidate = 2;
  const fs::path train_file = dir / "tiny_train.json";
  write_file(train_file, serialize_scenario(train));
  const int ta = run_command({"train", train_file.string(), "--out",
                              (dir / "train_a").string(), "--workers", "2",
                              "--log-level", "quiet"});
  const int tb = run_command({"train", train_file.string(), "--out",
                              (dir / "train_b").string(), "--workers", "1",
                              "--log-level", "quiet"});
  const bool train_same =
      ta == 0 && tb == 0 &&
      read_file(dir / "train_a" / "metrics.log") ==
          read_file(dir / "train_b" / "metrics.log") &&
      read_file(dir / "train_a" / "policy.params") ==
          read_file(dir / "train_b" / "policy.params");

  char detail[96];
  std::snprintf(detail, sizeof(detail), "run byte-identical %s, train %s",
                run_same ? "yes" : "NO", train_same ? "yes" : "NO");
  report(7, "repeated runs and trainings are byte-identical", run_same && train_same,
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 8: oracle suites.
// ---------------------------------------------------------------------------

void criterion_8() {
  bool pass = true;
  std::string detail;

  // FK/IK residuals over 1000 random reachable targets.
  {
    int fails = 0;
    const double secs = elapsed_seconds([&] {
      Rng rng(42);
      for (int i = 0; i < 1000; ++i) {
        const JointVector truth{{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi),
                                 rng.uniform(-kPi, kPi)}};
        const Pose2 target = forward_kinematics(truth);
        const JointVector q = solve_initial_joints(target);
        const Pose2 fk = forward_kinematics(q);
        const double residual =
            std::hypot(fk.x - target.x, fk.y - target.y) +
            std::fabs(wrap_angle(fk.theta - target.theta));
        if (residual > 1e-6) ++fails;
      }
    });
    pass = pass && fails == 0 && secs <= 30.0;
    detail += "fk/ik " + std::to_string(fails) + " fails";
  }

  // Circle fit exactness on noiseless inputs.
  {
    int fails = 0;
    const double secs = elapsed_seconds([&] {
      Rng rng(31);
      for (int i = 0; i < 500; ++i) {
        const double r = rng.uniform(0.1, 2.0);
        const Vec2 c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        std::vector<Vec2> pts;
        const int n = 3 + static_cast<int>(rng.next_u64() % 6);
        for (int k = 0; k < n; ++k) {
          const double a = rng.uniform(0, 2 * kPi);
          pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
        }
        try {
          const CircleFitResult fit = circle_fit(pts);
          if (std::fabs(fit.radius - r) > 1e-6 ||
              std::fabs(fit.center.x - c.x) > 1e-6 ||
              std::fabs(fit.center.y - c.y) > 1e-6) {
            ++fails;
          }
        } catch (const IllConditionedError&) {
          // random angles can nearly repeat; not a fit failure
        }
      }
    });
    pass = pass && fails == 0 && secs <= 30.0;
    detail += ", circle " + std::to_string(fails) + " fails";
  }

  // Codec round-trip identity on 1000 random states.
  {
    int fails = 0;
    const double secs = elapsed_seconds([&] {
      Rng rng(2025);
      for (int i = 0; i < 1000; ++i) {
        WorldState w;
        w.joints = {{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi),
                     rng.uniform(-kPi, kPi)}};
        w.ee = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-kPi, kPi)};
        w.aperture = rng.uniform(0, 0.15);
        w.ee_lift = rng.uniform(0, 0.1);
        w.wrist_force = rng.uniform(0, 30);
        w.time_step = static_cast<std::int64_t>(rng.next_u64() % 100000);
        ObjectState obj;
        obj.pose = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                    rng.uniform(-kPi, kPi)};
        obj.width = rng.uniform(0.01, 0.15);
        obj.mass = rng.uniform(0.05, 1.0);
        w.objects.emplace("object", obj);
        w.target_id = "object";
        const std::string bytes = encode_state(w);
        if (encode_state(decode_state(bytes)) != bytes) ++fails;
      }
    });
    pass = pass && fails == 0 && secs <= 30.0;
    detail += ", codec " + std::to_string(fails) + " fails";
  }

  // CEM recovers the optimum of -(x-3)^2.
  {
    double err = 1e9;
    const double secs = elapsed_seconds([&] {
      TrainConfig c;
      c.population = 64;
      c.elite_fraction = 0.125;
      c.iterations = 20;
      c.episodes_per_candidate = 1;
      c.init_sigma = 1.0;
      c.sigma_floor = 0.01;
      c.seed = 5;
      const TrainReport rep = cem_optimize(
          []() -> EpisodeObjective {
            return [](std::span<const double> x, std::uint64_t) {
              return -(x[0] - 3.0) * (x[0] - 3.0);
            };
          },
          1, c);
      err = std::fabs(rep.final_params[0] - 3.0);
    });
    pass = pass && err <= 0.01 && secs <= 30.0;
    char buf[48];
    std::snprintf(buf, sizeof(buf), ", cem err %.4f", err);
    detail += buf;
  }

  report(8, "oracle suites within their budgets", pass, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (scenarios: %s)\n", TASKSEQ_SCENARIO_DIR);
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d criterion(s) failed\n", g_failures);
  fs::remove_all(work_dir());
  return g_failures;
}
