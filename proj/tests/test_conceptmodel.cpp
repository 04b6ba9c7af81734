#include "doctest.h"
#include "taskseq/codec.hpp"
#include "taskseq/concept_model.hpp"
#include "taskseq/errors.hpp"
#include "taskseq/rng.hpp"
#include "taskseq/sequencer.hpp"
#include "taskseq/tasks.hpp"

using namespace taskseq;

namespace {

TaskRegistry grasp_pick_registry(GraspTaskConfig g = {}) {
  TaskRegistry reg;
  reg.add("grasp", make_grasp_model(g));
  reg.add("pick", make_pick_model({}));
  return reg;
}

}  // namespace

TEST_CASE("actor sampling is deterministic per seed") {
  const ConceptModel model = make_grasp_model({});
  const ResolvedActorConfiguration a = sample_actor_configuration(model, 7);
  const ResolvedActorConfiguration b = sample_actor_configuration(model, 7);
  CHECK(a.values == b.values);
  CHECK(a.hidden_parameters == b.hidden_parameters);
  const ResolvedActorConfiguration c = sample_actor_configuration(model, 8);
  CHECK(a.values.at("object.width") != c.values.at("object.width"));
}

TEST_CASE("degenerate ranges sample their single value") {
  GraspTaskConfig g;
  g.width_range = {0.08, 0.08};
  const ConceptModel model = make_grasp_model(g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(sample_actor_configuration(model, seed).values.at("object.width") ==
          0.08);
  }
}

TEST_CASE("sampling is uniform over the range") {
  const ConceptModel model = make_grasp_model({});  // widths [0.04, 0.12]
  double sum = 0.0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    sum += sample_actor_configuration(model, static_cast<std::uint64_t>(seed))
               .values.at("object.width");
  }
  CHECK(std::fabs(sum / n - 0.08) < 0.002);
}

TEST_CASE("grasp instantiates resting and unattached") {
  const ConceptModel model = make_grasp_model({});
  const WorldState w = instantiate(model, sample_actor_configuration(model, 3));
  CHECK(w.attachment_of("object", Attachment::Parent::EnvironmentResting) !=
        nullptr);
  CHECK(w.attachment_of("object", Attachment::Parent::EndEffector) == nullptr);
  CHECK(w.target_id == "object");
  CHECK(w.aperture == w.aperture_max);
}

TEST_CASE("instantiate passes compatible end states through unchanged") {
  const ConceptModel door = make_door_model({});
  const WorldState start =
      instantiate(door, sample_actor_configuration(door, 12));
  const WorldState again = instantiate(door, start);
  CHECK(encode_state(again) == encode_state(start));
}

TEST_CASE("instantiate rejects incompatible end states") {
  const ConceptModel door = make_door_model({});
  WorldState bad = instantiate(door, sample_actor_configuration(door, 12));
  bad.remove_attachment("handle", Attachment::Parent::EndEffector);
  CHECK_THROWS_AS(instantiate(door, bad), IncompatibleStateError);
}

TEST_CASE("grasp necessary cost follows distance plus contact penalty") {
  const ConceptModel model = make_grasp_model({});
  ObservableState at_goal;
  at_goal.estimated_target_distance = 0.0;
  at_goal.jaw_contacts = {true, true};
  CHECK(necessary_cost(model, at_goal) == 0.0);

  ObservableState far;
  far.estimated_target_distance = 0.3;
  CHECK(necessary_cost(model, far) == doctest::Approx(1.3));
}

TEST_CASE("door necessary cost is zero below the stress limit") {
  const ConceptModel model = make_door_model({});
  ObservableState o;
  o.wrist_force = 10.0;
  CHECK(necessary_cost(model, o) == 0.0);
  o.wrist_force = 17.5;
  CHECK(necessary_cost(model, o) == doctest::Approx(2.5));
}

TEST_CASE("grasp sufficient goal runs the subsequent pick") {
  TaskRegistry reg = grasp_pick_registry();
  EnginePipeline pipeline = EnginePipeline::local({});
  pipeline.set_noise_seed(5);
  SequenceRunner runner(reg, pipeline);
  const ConceptModel& grasp = reg.at("grasp");

  // Firm bilateral grip: pick lifts the object and reports success.
  WorldState firm = instantiate(grasp, sample_actor_configuration(grasp, 3));
  {
    ObjectState& obj = firm.objects.at("object");
    firm.ee = {obj.pose.x - 0.01, obj.pose.y, 0.0};
    firm.aperture = obj.width - 0.02;  // 10 N
    Attachment grip;
    grip.child = "object";
    grip.parent = Attachment::Parent::EndEffector;
    grip.grip_offset = relative_pose(firm.ee, obj.pose);
    firm.attachments.push_back(grip);
  }
  CHECK(sufficient_satisfied(grasp, firm, firm, runner));

  // Terminated before any contact: pick gives up immediately.
  const WorldState untouched =
      instantiate(grasp, sample_actor_configuration(grasp, 3));
  CHECK(!sufficient_satisfied(grasp, untouched, untouched, runner));
}

TEST_CASE("a crushed object fails the sufficient goal outright") {
  TaskRegistry reg = grasp_pick_registry();
  EnginePipeline pipeline = EnginePipeline::local({});
  SequenceRunner runner(reg, pipeline);
  const ConceptModel& grasp = reg.at("grasp");
  WorldState firm = instantiate(grasp, sample_actor_configuration(grasp, 3));
  ObjectState& obj = firm.objects.at("object");
  firm.ee = {obj.pose.x, obj.pose.y, 0.0};
  firm.aperture = obj.width - 0.02;
  Attachment grip;
  grip.child = "object";
  grip.parent = Attachment::Parent::EndEffector;
  firm.attachments.push_back(grip);
  obj.crushed = true;
  CHECK(!sufficient_satisfied(grasp, firm, firm, runner));
}

TEST_CASE("door sufficient goal is an angle predicate") {
  const DoorTaskConfig cfg;
  const ConceptModel door = make_door_model(cfg);
  WorldState w = instantiate(door, sample_actor_configuration(door, 9));
  TaskRegistry reg;
  reg.add("door_open", door);
  EnginePipeline pipeline = EnginePipeline::local({});
  SequenceRunner runner(reg, pipeline);

  CHECK(!sufficient_satisfied(door, w, w, runner));  // still at 0 degrees

  // Rotate the handle to the target angle around the true hinge.
  const Attachment* hinge =
      w.attachment_of("handle", Attachment::Parent::EnvironmentRigid);
  ObjectState& handle = w.objects.at("handle");
  const double angle = hinge->hinge.theta + cfg.target_angle;
  handle.pose.x = hinge->hinge.x + hinge->radius * std::cos(angle);
  handle.pose.y = hinge->hinge.y + hinge->radius * std::sin(angle);
  CHECK(sufficient_satisfied(door, w, w, runner));
}

TEST_CASE("programmed model matches a direct task-model execution") {
  // The concept-model path for a fully known task must produce the same
  // trajectory bytes as stepping the policy by hand.
  BringTaskConfig bcfg;
  bcfg.dx = 0.2;
  TaskRegistry reg;
  reg.add("bring", make_bring_model(bcfg));

  WorldState start;
  start.ee = {0.5, 0.0, 0.0};
  start.joints = solve_initial_joints(start.ee);
  ObjectState obj;
  obj.pose = {0.51, 0.0, 0.0};
  obj.width = 0.08;
  obj.mass = 0.2;
  start.objects.emplace("object", obj);
  start.target_id = "object";
  start.aperture = 0.06;
  Attachment grip;
  grip.child = "object";
  grip.parent = Attachment::Parent::EndEffector;
  grip.grip_offset = relative_pose(start.ee, obj.pose);
  start.attachments.push_back(grip);

  const std::uint64_t seed = 77;

  EnginePipeline p1 = EnginePipeline::local({});
  SequenceRunner runner(reg, p1);
  TaskSequence seq{{"bring"}, SequenceMode::Execute, 0};
  const EpisodeResult via_concept = runner.run_sequence(seq, start, seed);

  // Direct path: same policy object, same pipeline stepping, no concept
  // machinery.
  EnginePipeline p2 = EnginePipeline::local({});
  p2.set_noise_seed(derive_seed(seed, {0x6e01}));
  auto policy = reg.make_policy("bring");
  policy->begin_episode(start);
  WorldState w = start;
  SenseResult sense = p2.observe(w);
  std::string direct_bytes;
  for (int i = 0; i < 100; ++i) {
    const ActionDecision d = policy->act(sense.observation, sense.observable, &w);
    const PipelineStepResult out = p2.step(w, clamp_command(d.command));
    w = out.world;
    sense.observation = out.observation;
    sense.observable = out.observable;
    direct_bytes += encode_state(w) + "\n";
    if (d.terminate) break;
  }
  std::string concept_bytes;
  for (const StepLog& log : via_concept.trajectory) {
    concept_bytes += encode_state(log.world) + "\n";
  }
  CHECK(concept_bytes == direct_bytes);
}
