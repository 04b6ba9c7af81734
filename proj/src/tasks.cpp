#include "taskseq/tasks.hpp"

#include <algorithm>
#include <cmath>

#include "taskseq/errors.hpp"

namespace taskseq {

// ---------------------------------------------------------------------------
// Circle fit.
// ---------------------------------------------------------------------------

CircleFitResult circle_fit(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw IllConditionedError("circle_fit: need at least 3 points");

  Vec2 centroid{};
  for (const Vec2& p : points) centroid = centroid + p;
  centroid.x /= static_cast<double>(n);
  centroid.y /= static_cast<double>(n);

  double suu = 0.0, svv = 0.0, suv = 0.0;
  double suuu = 0.0, svvv = 0.0, suvv = 0.0, svuu = 0.0;
  for (const Vec2& p : points) {
    const double u = p.x - centroid.x;
    const double v = p.y - centroid.y;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suvv += u * v * v;
    svuu += v * u * u;
  }

  const double det = suu * svv - suv * suv;
  if (std::fabs(det) <= 1e-12) {
    throw IllConditionedError("circle_fit: points are collinear");
  }
  const double bu = 0.5 * (suuu + suvv);
  const double bv = 0.5 * (svvv + svuu);
  const double cu = (bu * svv - bv * suv) / det;
  const double cv = (bv * suu - bu * suv) / det;

  CircleFitResult fit;
  fit.center = {centroid.x + cu, centroid.y + cv};
  fit.radius =
      std::sqrt(cu * cu + cv * cv + (suu + svv) / static_cast<double>(n));
  return fit;
}

// ---------------------------------------------------------------------------
// Shared helpers.
// ---------------------------------------------------------------------------

namespace {

/// Closed-form 2R wrist solutions (both elbow branches), used to seed
/// the damped-least-squares solver near-exactly.
std::array<JointVector, 2> analytic_ik_seeds(const Pose2& target) {
  const double wx = target.x - kLinkLengths[2] * std::cos(target.theta);
  const double wy = target.y - kLinkLengths[2] * std::sin(target.theta);
  const double d2 = wx * wx + wy * wy;
  const double l1 = kLinkLengths[0];
  const double l2 = kLinkLengths[1];
  const double c2 =
      std::clamp((d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  std::array<JointVector, 2> seeds{};
  for (int branch = 0; branch < 2; ++branch) {
    const double q2 = (branch == 0 ? 1.0 : -1.0) * std::acos(c2);
    const double q1 = std::atan2(wy, wx) -
                      std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    const double q3 = wrap_angle(target.theta - q1 - q2);
    seeds[static_cast<std::size_t>(branch)] =
        JointVector{{wrap_angle(q1), wrap_angle(q2), q3}};
  }
  return seeds;
}

}  // namespace

JointVector solve_initial_joints(const Pose2& ee) {
  for (const JointVector& seed : analytic_ik_seeds(ee)) {
    try {
      return inverse_kinematics(ee, seed);
    } catch (const NoConvergenceError&) {
      continue;
    }
  }
  static constexpr std::array<std::array<double, 3>, 3> kFallbackSeeds{{
      {0.1, 0.4, -0.3},
      {1.2, -1.8, 0.8},
      {-0.5, 1.5, -0.8},
  }};
  for (const auto& s : kFallbackSeeds) {
    try {
      return inverse_kinematics(ee, JointVector{{s[0], s[1], s[2]}});
    } catch (const NoConvergenceError&) {
      continue;
    }
  }
  throw NoConvergenceError("solve_initial_joints: no seed converged for pose");
}

namespace {

double resolved_value(const ResolvedActorConfiguration& config,
                      const std::string& key) {
  auto it = config.values.find(key);
  if (it == config.values.end()) {
    throw ConfigurationError("actor configuration misses '" + key + "'");
  }
  return it->second;
}

double hidden_value(const ResolvedActorConfiguration& config,
                    const std::string& name) {
  auto it = config.hidden_parameters.find(name);
  if (it == config.hidden_parameters.end()) {
    throw ConfigurationError("hidden parameter '" + name + "' not sampled");
  }
  return it->second;
}

/// Grip-maintenance cost: zero while both jaws report contact.
double grip_maintenance_cost(const ObservableState& o) {
  return o.jaw_contacts.bilateral() ? 0.0 : 1.0;
}

const Attachment* rigid_attachment(const WorldState& w, const std::string& id) {
  return w.attachment_of(id, Attachment::Parent::EnvironmentRigid);
}

bool ee_attached(const WorldState& w, const std::string& id) {
  return w.attachment_of(id, Attachment::Parent::EndEffector) != nullptr;
}

bool resting_attached(const WorldState& w, const std::string& id) {
  return w.attachment_of(id, Attachment::Parent::EnvironmentResting) != nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grasp.
// ---------------------------------------------------------------------------

GraspPolicy::GraspPolicy(double approach_axis) : approach_axis_(approach_axis) {}

void GraspPolicy::set_params(std::span<const double> params) {
  if (params.size() != static_cast<std::size_t>(kGraspParamCount)) {
    throw ConfigurationError("grasp policy expects 24 parameters");
  }
  std::copy(params.begin(), params.end(), w_.begin());
}

std::vector<double> GraspPolicy::params() const {
  return {w_.begin(), w_.end()};
}

ActionDecision GraspPolicy::act(const Observation& obs,
                                const ObservableState& observable,
                                const WorldState* world) {
  (void)observable;
  (void)world;
  std::array<double, 4> action{};
  for (int i = 0; i < 6; ++i) {
    const double feature = obs[static_cast<std::size_t>(i)] /
                           kGraspObsScale[static_cast<std::size_t>(i)];
    for (int j = 0; j < 4; ++j) {
      action[static_cast<std::size_t>(j)] +=
          w_[static_cast<std::size_t>(i * 4 + j)] * feature;
    }
  }
  const double advance = action[0] * kGraspActScale[0];
  const double lateral = action[1] * kGraspActScale[1];
  const double close = action[2] * kGraspActScale[2];

  const double c = std::cos(approach_axis_);
  const double s = std::sin(approach_axis_);
  Command cmd;
  cmd.dx = advance * c - lateral * s;
  cmd.dy = advance * s + lateral * c;
  cmd.aperture_delta = -close;
  return {clamp_command(cmd), action[3] > 0.0};
}

std::vector<double> hand_built_grasp_params() {
  // Row-major by observation index: [advance, lateral, close, logit].
  // obs (scaled): [distance, lateral offset, aperture, torque L/R, wrist].
  std::array<double, kGraspParamCount> w{};
  auto at = [&w](int obs_idx, int out_idx) -> double& {
    return w[static_cast<std::size_t>(obs_idx * 4 + out_idx)];
  };
  at(0, 0) = 2.0;    // advance toward the estimated distance
  at(1, 1) = 0.8;    // cancel the lateral offset
  at(2, 2) = 1.8;    // close, faster while open...
  at(0, 2) = -3.2;   // ...slower while still approaching
  at(3, 2) = -0.5;   // brake once the jaws load up
  at(4, 2) = -0.5;
  at(3, 3) = 1.0;    // terminate once both torques carry the load
  at(4, 3) = 1.0;
  at(2, 3) = -1.05;
  at(0, 3) = -0.12;
  return {w.begin(), w.end()};
}

ConceptModel make_grasp_model(const GraspTaskConfig& config) {
  ConceptModel m;
  m.id = "grasp";
  m.screw_class = {ScrewClass::Kind::Translation, 1, ScrewClass::Contact::Make};
  m.max_steps = config.max_steps;
  m.policy_param_count = kGraspParamCount;
  m.policy_family = kGraspPolicyFamily;

  ActorConfiguration actors;
  actors.actors.push_back(
      {ActorRole::TargetObject,
       "object",
       {{"width", std::nullopt, config.width_range},
        {"mass", config.object_mass, std::nullopt}}});
  actors.actors.push_back({ActorRole::Environment, "table", {}});
  actors.actors.push_back(
      {ActorRole::EndEffector,
       "gripper",
       {{"aperture_max", config.aperture_max, std::nullopt}}});
  m.actor_configs.push_back(std::move(actors));

  m.parameters = {
      {"target_distance", std::nullopt, false, config.distance_range},
      {"lateral_offset", std::nullopt, false, config.lateral_range},
      {"approach_axis", config.approach_axis, true, std::nullopt},
  };

  // Necessary goal: close to the target with bilateral jaw contact.
  m.necessary.cost = [](const ObservableState& o) {
    const double distance = std::max(0.0, o.estimated_target_distance);
    return distance + (o.jaw_contacts.bilateral() ? 0.0 : 1.0);
  };

  m.sufficient = SubsequentTaskGoal{config.subsequent_tasks};

  m.instantiate_pattern = {AttachmentPattern::Req::No,
                           AttachmentPattern::Req::Yes,
                           AttachmentPattern::Req::Any};
  m.requires_pattern = m.instantiate_pattern;
  m.produces_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Yes,
                        AttachmentPattern::Req::Any};

  m.config_provides_initial = true;
  const double approach = config.approach_axis;
  m.build_initial = [approach](const ResolvedActorConfiguration& rc) {
    WorldState w;
    w.aperture_max = resolved_value(rc, "gripper.aperture_max");
    w.aperture = w.aperture_max;
    w.ee = {0.0, 0.0, approach};
    w.joints = solve_initial_joints(w.ee);

    const double distance = hidden_value(rc, "target_distance");
    const double lateral = hidden_value(rc, "lateral_offset");
    ObjectState obj;
    obj.pose = {distance * std::cos(approach) - lateral * std::sin(approach),
                distance * std::sin(approach) + lateral * std::cos(approach),
                0.0};
    obj.width = resolved_value(rc, "object.width");
    obj.mass = resolved_value(rc, "object.mass");
    obj.rest_surface = "table";
    w.objects.emplace("object", std::move(obj));
    w.target_id = "object";

    Attachment rest;
    rest.child = "object";
    rest.parent = Attachment::Parent::EnvironmentResting;
    rest.surface = "table";
    w.attachments.push_back(std::move(rest));
    return w;
  };

  m.make_policy = [approach]() -> std::unique_ptr<Policy> {
    return std::make_unique<GraspPolicy>(approach);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Pick.
// ---------------------------------------------------------------------------

namespace {

class PickPolicy final : public Policy {
 public:
  explicit PickPolicy(PickTaskConfig config) : config_(config) {}

  PolicyKind kind() const override { return PolicyKind::Programmed; }

  void begin_episode(const WorldState& start) override {
    start_height_ = 0.0;
    if (const ObjectState* obj = start.find_object(start.target_id)) {
      start_height_ = obj->height;
    }
  }

  ActionDecision act(const Observation&, const ObservableState&,
                     const WorldState* world) override {
    const ObjectState* obj = world->find_object(world->target_id);
    if (obj == nullptr || !ee_attached(*world, world->target_id)) {
      return {{}, true};  // nothing held: give up, goal predicate fails
    }
    const double remaining = config_.lift_height - (obj->height - start_height_);
    if (remaining <= 0.0) return {{}, true};
    Command c;
    c.lift_delta = CommandLimits{}.lift;
    return {c, remaining <= c.lift_delta};
  }

 private:
  PickTaskConfig config_;
  double start_height_ = 0.0;
};

}  // namespace

ConceptModel make_pick_model(const PickTaskConfig& config) {
  ConceptModel m;
  m.id = "pick";
  m.screw_class = {ScrewClass::Kind::Translation, 1, ScrewClass::Contact::Break};
  m.max_steps = config.max_steps;

  m.necessary.cost = grip_maintenance_cost;

  SufficientPredicate goal;
  const double lift_height = config.lift_height;
  goal.bind = [lift_height](const WorldState& start) {
    const std::string id = start.target_id;
    double start_height = 0.0;
    if (const ObjectState* obj = start.find_object(id)) {
      start_height = obj->height;
    }
    return [id, start_height, lift_height](const WorldState& w) {
      const ObjectState* obj = w.find_object(id);
      if (obj == nullptr || !ee_attached(w, id)) return 1.0;
      return (obj->height - start_height >= lift_height - 1e-9) ? 0.0 : 1.0;
    };
  };
  m.sufficient = std::move(goal);

  m.instantiate_pattern = {};  // handles a missing grasp itself
  m.requires_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Any};
  m.produces_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::No,
                        AttachmentPattern::Req::Any};
  m.make_policy = [config]() -> std::unique_ptr<Policy> {
    return std::make_unique<PickPolicy>(config);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Bring.
// ---------------------------------------------------------------------------

namespace {

class BringPolicy final : public Policy {
 public:
  explicit BringPolicy(BringTaskConfig config) : config_(config) {}

  PolicyKind kind() const override { return PolicyKind::Programmed; }

  void begin_episode(const WorldState& start) override {
    target_ = {start.ee.x + config_.dx, start.ee.y + config_.dy,
               wrap_angle(start.ee.theta + config_.dtheta)};
  }

  ActionDecision act(const Observation&, const ObservableState&,
                     const WorldState* world) override {
    const double rx = target_.x - world->ee.x;
    const double ry = target_.y - world->ee.y;
    const double rt = wrap_angle(target_.theta - world->ee.theta);
    const CommandLimits limits;
    if (std::fabs(rx) <= config_.tolerance &&
        std::fabs(ry) <= config_.tolerance &&
        std::fabs(rt) <= config_.tolerance) {
      return {{}, true};
    }
    Command c;
    c.dx = rx;
    c.dy = ry;
    c.dtheta = rt;
    const bool completes = std::fabs(rx) <= limits.translation &&
                           std::fabs(ry) <= limits.translation &&
                           std::fabs(rt) <= limits.rotation;
    return {clamp_command(c, limits), completes};
  }

 private:
  BringTaskConfig config_;
  Pose2 target_{};
};

}  // namespace

ConceptModel make_bring_model(const BringTaskConfig& config) {
  ConceptModel m;
  m.id = "bring";
  m.screw_class = {ScrewClass::Kind::Translation, 6,
                   ScrewClass::Contact::Maintain};
  m.max_steps = config.max_steps;

  m.necessary.cost = grip_maintenance_cost;

  SufficientPredicate goal;
  goal.epsilon = config.tolerance;
  const double dx = config.dx, dy = config.dy, dtheta = config.dtheta;
  goal.bind = [dx, dy, dtheta](const WorldState& start) {
    const std::string id = start.target_id;
    Pose2 start_pose{};
    if (const ObjectState* obj = start.find_object(id)) {
      start_pose = obj->pose;
    }
    return [id, start_pose, dx, dy, dtheta](const WorldState& w) {
      const ObjectState* obj = w.find_object(id);
      if (obj == nullptr) return 1.0;
      const double ex = std::fabs(obj->pose.x - start_pose.x - dx);
      const double ey = std::fabs(obj->pose.y - start_pose.y - dy);
      const double et =
          std::fabs(wrap_angle(obj->pose.theta - start_pose.theta - dtheta));
      return std::max(ex, std::max(ey, et));
    };
  };
  m.sufficient = std::move(goal);

  m.instantiate_pattern = {};
  m.requires_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Any};
  m.produces_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Any};
  m.make_policy = [config]() -> std::unique_ptr<Policy> {
    return std::make_unique<BringPolicy>(config);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Place.
// ---------------------------------------------------------------------------

namespace {

class PlacePolicy final : public Policy {
 public:
  explicit PlacePolicy(PlaceTaskConfig config) : config_(config) {}

  PolicyKind kind() const override { return PolicyKind::Programmed; }

  ActionDecision act(const Observation&, const ObservableState&,
                     const WorldState* world) override {
    if (resting_attached(*world, world->target_id)) {
      return {{}, true};
    }
    Command c;
    c.lift_delta = -CommandLimits{}.lift;
    return {c, false};
  }

 private:
  PlaceTaskConfig config_;
};

}  // namespace

ConceptModel make_place_model(const PlaceTaskConfig& config) {
  ConceptModel m;
  m.id = "place";
  m.screw_class = {ScrewClass::Kind::Translation, 1, ScrewClass::Contact::Make};
  m.max_steps = config.max_steps;

  m.necessary.cost = grip_maintenance_cost;

  SufficientPredicate goal;
  goal.bind = [](const WorldState& start) {
    const std::string id = start.target_id;
    return [id](const WorldState& w) {
      return (resting_attached(w, id) && ee_attached(w, id)) ? 0.0 : 1.0;
    };
  };
  m.sufficient = std::move(goal);

  m.instantiate_pattern = {};
  m.requires_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Any};
  m.produces_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Yes,
                        AttachmentPattern::Req::Any};
  m.make_policy = [config]() -> std::unique_ptr<Policy> {
    return std::make_unique<PlacePolicy>(config);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Release.
// ---------------------------------------------------------------------------

namespace {

class ReleasePolicy final : public Policy {
 public:
  explicit ReleasePolicy(ReleaseTaskConfig config) : config_(config) {}

  PolicyKind kind() const override { return PolicyKind::Programmed; }

  void begin_episode(const WorldState& start) override {
    retreating_ = false;
    retreat_start_ = start.ee;
    retreat_dir_ = {-std::cos(start.ee.theta), -std::sin(start.ee.theta)};
  }

  ActionDecision act(const Observation&, const ObservableState&,
                     const WorldState* world) override {
    const CommandLimits limits;
    if (!retreating_) {
      if (world->held_attachment() != nullptr ||
          world->jaw_torques.left > 0.0 || world->jaw_torques.right > 0.0) {
        Command c;
        c.aperture_delta = limits.aperture;
        return {c, false};
      }
      retreating_ = true;
      retreat_start_ = world->ee;
    }
    const double retreated = planar_distance(retreat_start_, world->ee);
    const double remaining = config_.retreat_distance - retreated;
    if (remaining <= 0.0) return {{}, true};
    const double step = std::min(limits.translation, remaining);
    Command c;
    c.dx = retreat_dir_.x * step;
    c.dy = retreat_dir_.y * step;
    return {c, remaining <= limits.translation};
  }

 private:
  ReleaseTaskConfig config_;
  bool retreating_ = false;
  Pose2 retreat_start_{};
  Vec2 retreat_dir_{};
};

}  // namespace

ConceptModel make_release_model(const ReleaseTaskConfig& config) {
  ConceptModel m;
  m.id = "release";
  m.screw_class = {ScrewClass::Kind::Translation, 1, ScrewClass::Contact::Break};
  m.max_steps = config.max_steps;

  // Necessary goal: jaws unloaded.
  m.necessary.cost = [](const ObservableState& o) {
    return o.jaw_torques.left + o.jaw_torques.right;
  };

  SufficientPredicate goal;
  const std::optional<DropRegion> region = config.region;
  goal.bind = [region](const WorldState& start) {
    const std::string id = start.target_id;
    return [id, region](const WorldState& w) {
      const ObjectState* obj = w.find_object(id);
      if (obj == nullptr) return 1.0;
      if (ee_attached(w, id) || !resting_attached(w, id)) return 1.0;
      if (region.has_value()) {
        const double d = (obj->pose.position() - region->center).norm();
        if (d > region->radius) return 1.0;
      }
      return 0.0;
    };
  };
  m.sufficient = std::move(goal);

  m.instantiate_pattern = {};
  m.requires_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Any};
  m.produces_pattern = {AttachmentPattern::Req::No, AttachmentPattern::Req::Yes,
                        AttachmentPattern::Req::Any};
  m.make_policy = [config]() -> std::unique_ptr<Policy> {
    return std::make_unique<ReleasePolicy>(config);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Door opening.
// ---------------------------------------------------------------------------

DoorPolicy::DoorPolicy(const DoorTaskConfig& config)
    : config_(config), direction_(config.target_angle >= 0.0 ? 1.0 : -1.0) {}

void DoorPolicy::begin_episode(const WorldState&) {
  estimator_ = DoorEstimatorState{};
}

ActionDecision DoorPolicy::act(const Observation&,
                               const ObservableState& observable,
                               const WorldState*) {
  const Pose2 ee = observable.ee;
  estimator_.samples.push_back(ee.position());

  if (estimator_.samples.size() >= 3) {
    try {
      const CircleFitResult fit = circle_fit(estimator_.samples);
      estimator_.center_est = fit.center;
      estimator_.radius_est = fit.radius;
      estimator_.has_fit = true;
    } catch (const IllConditionedError&) {
      // keep the previous fit, if any
    }
    if (estimator_.has_fit) {
      // Re-walk the whole motion history against the current center
      // estimate; the bootstrap arc is counted retroactively.
      double progress = 0.0;
      for (std::size_t i = 1; i < estimator_.samples.size(); ++i) {
        const Vec2 a = estimator_.samples[i - 1] - estimator_.center_est;
        const Vec2 b = estimator_.samples[i] - estimator_.center_est;
        progress +=
            wrap_angle(std::atan2(b.y, b.x) - std::atan2(a.y, a.x));
      }
      estimator_.angle_progress = progress;
    }
  }

  const double target_magnitude = std::fabs(config_.target_angle);
  if (estimator_.has_fit &&
      direction_ * estimator_.angle_progress >= target_magnitude) {
    return {{}, true};
  }

  Command c;
  if (!estimator_.has_fit) {
    // Probe perpendicular to the approach axis to break collinearity.
    const Vec2 probe = rot90_cw(ee.heading()) * direction_;
    c.dx = config_.arc_step * probe.x;
    c.dy = config_.arc_step * probe.y;
    return {clamp_command(c), false};
  }

  const Vec2 radial = ee.position() - estimator_.center_est;
  const double dist = radial.norm();
  if (dist <= 0.0) return {{}, false};
  const Vec2 radial_unit = radial * (1.0 / dist);
  const Vec2 tangent =
      direction_ > 0.0 ? rot90_ccw(radial_unit) : rot90_cw(radial_unit);
  const double remaining_angle =
      std::max(0.0, target_magnitude - direction_ * estimator_.angle_progress);
  const double arc =
      std::min(config_.arc_step, remaining_angle * estimator_.radius_est);
  c.dx = arc * tangent.x;
  c.dy = arc * tangent.y;
  c.dtheta = direction_ * arc / estimator_.radius_est;
  return {clamp_command(c), false};
}

std::map<std::string, double> DoorPolicy::diagnostics() const {
  return {{"radius_est", estimator_.radius_est},
          {"center_est_x", estimator_.center_est.x},
          {"center_est_y", estimator_.center_est.y},
          {"angle_progress", estimator_.angle_progress},
          {"samples", static_cast<double>(estimator_.samples.size())}};
}

ConceptModel make_door_model(const DoorTaskConfig& config) {
  ConceptModel m;
  m.id = "door_open";
  m.screw_class = {ScrewClass::Kind::Rotation, 1, ScrewClass::Contact::Maintain};
  m.max_steps = config.max_steps;

  ActorConfiguration actors;
  actors.actors.push_back(
      {ActorRole::TargetObject,
       "handle",
       {{"width", config.handle_width, std::nullopt},
        {"mass", config.handle_mass, std::nullopt}}});
  actors.actors.push_back({ActorRole::Environment,
                           "hinge",
                           {{"x", config.hinge.x, std::nullopt},
                            {"y", config.hinge.y, std::nullopt}}});
  actors.actors.push_back(
      {ActorRole::EndEffector,
       "gripper",
       {{"aperture", config.grip_aperture, std::nullopt}}});
  m.actor_configs.push_back(std::move(actors));

  m.parameters = {
      {"rotation_radius", std::nullopt, false, config.radius_range},
      {"rotation_center_x", config.hinge.x, true, std::nullopt},
      {"rotation_center_y", config.hinge.y, true, std::nullopt},
      {"target_angle", config.target_angle, true, std::nullopt},
  };

  // Necessary goal: move along the environment constraint, i.e. keep the
  // wrist below the stress limit.
  const double f_max = config.max_wrist_force;
  m.necessary.cost = [f_max](const ObservableState& o) {
    return std::max(0.0, o.wrist_force - f_max);
  };

  SufficientPredicate goal;
  goal.epsilon = config.angle_epsilon;
  const double target_angle = config.target_angle;
  goal.bind = [target_angle](const WorldState& start) {
    const std::string id = start.target_id;
    return [id, target_angle](const WorldState& w) {
      const Attachment* hinge = rigid_attachment(w, id);
      const ObjectState* obj = w.find_object(id);
      if (hinge == nullptr || obj == nullptr) return kPi;
      const double angle =
          std::atan2(obj->pose.y - hinge->hinge.y, obj->pose.x - hinge->hinge.x);
      const double moved = wrap_angle(angle - hinge->hinge.theta);
      return std::fabs(wrap_angle(moved - target_angle));
    };
  };
  m.sufficient = std::move(goal);

  m.instantiate_pattern = {AttachmentPattern::Req::Yes,
                           AttachmentPattern::Req::Any,
                           AttachmentPattern::Req::Yes};
  m.requires_pattern = m.instantiate_pattern;
  m.produces_pattern = {AttachmentPattern::Req::Yes, AttachmentPattern::Req::Any,
                        AttachmentPattern::Req::Yes};

  m.config_provides_initial = true;
  const DoorTaskConfig cfg = config;
  m.build_initial = [cfg](const ResolvedActorConfiguration& rc) {
    const double radius = hidden_value(rc, "rotation_radius");
    const double phi0 = cfg.initial_angle;
    const Vec2 hinge{resolved_value(rc, "hinge.x"), resolved_value(rc, "hinge.y")};
    const Vec2 handle_pos = hinge + Vec2{std::cos(phi0), std::sin(phi0)} * radius;

    WorldState w;
    w.aperture_max = 0.15;
    w.aperture = resolved_value(rc, "gripper.aperture");
    w.ee = {handle_pos.x, handle_pos.y, wrap_angle(phi0 + kPi)};
    w.joints = solve_initial_joints(w.ee);
    w.target_id = "handle";

    ObjectState handle;
    handle.pose = {handle_pos.x, handle_pos.y, 0.0};
    handle.width = resolved_value(rc, "handle.width");
    handle.mass = resolved_value(rc, "handle.mass");
    handle.rest_surface = "door";
    w.objects.emplace("handle", std::move(handle));

    Attachment rigid;
    rigid.child = "handle";
    rigid.parent = Attachment::Parent::EnvironmentRigid;
    rigid.hinge = {hinge.x, hinge.y, phi0};
    rigid.radius = radius;
    w.attachments.push_back(std::move(rigid));

    Attachment grip;
    grip.child = "handle";
    grip.parent = Attachment::Parent::EndEffector;
    grip.grip_offset = relative_pose(w.ee, w.objects.at("handle").pose);
    grip.grip_dz = 0.0;
    w.attachments.push_back(std::move(grip));

    const double force = grip_force(w.objects.at("handle").width, w.aperture);
    w.jaw_contacts = {true, true};
    w.jaw_torques = {force / 2.0, force / 2.0};
    return w;
  };

  m.make_policy = [cfg]() -> std::unique_ptr<Policy> {
    return std::make_unique<DoorPolicy>(cfg);
  };
  return m;
}

}  // namespace taskseq
