#include "taskseq/engines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "taskseq/errors.hpp"
#include "taskseq/rng.hpp"

namespace taskseq {

namespace {

double clamp_abs(double v, double limit) {
  return std::max(-limit, std::min(limit, v));
}

/// Solves the 3x3 system A x = b by Gaussian elimination with partial
/// pivoting. A is row-major.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a,
                             std::array<double, 3> b) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    const double d = a[col][col];
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / d;
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

Command clamp_command(const Command& c, const CommandLimits& limits) {
  Command out;
  out.dx = clamp_abs(c.dx, limits.translation);
  out.dy = clamp_abs(c.dy, limits.translation);
  out.dtheta = clamp_abs(c.dtheta, limits.rotation);
  out.aperture_delta = clamp_abs(c.aperture_delta, limits.aperture);
  out.lift_delta = clamp_abs(c.lift_delta, limits.lift);
  return out;
}

bool command_within_limits(const Command& c, const CommandLimits& limits) {
  return std::fabs(c.dx) <= limits.translation &&
         std::fabs(c.dy) <= limits.translation &&
         std::fabs(c.dtheta) <= limits.rotation &&
         std::fabs(c.aperture_delta) <= limits.aperture &&
         std::fabs(c.lift_delta) <= limits.lift;
}

// ---------------------------------------------------------------------------
// Kinematics.
// ---------------------------------------------------------------------------

Pose2 forward_kinematics(const JointVector& joints) {
  double angle = 0.0;
  double x = 0.0;
  double y = 0.0;
  for (int i = 0; i < 3; ++i) {
    angle += joints.q[i];
    x += kLinkLengths[i] * std::cos(angle);
    y += kLinkLengths[i] * std::sin(angle);
  }
  return {x, y, wrap_angle(joints.q[0] + joints.q[1] + joints.q[2])};
}

bool pose_reachable(const Pose2& target) {
  if (std::hypot(target.x, target.y) > kMaxReach) return false;
  // Wrist position implied by the pose; the first two links must reach it.
  const double wx = target.x - kLinkLengths[2] * std::cos(target.theta);
  const double wy = target.y - kLinkLengths[2] * std::sin(target.theta);
  return std::hypot(wx, wy) <= kLinkLengths[0] + kLinkLengths[1];
}

JointVector inverse_kinematics(const Pose2& target, const JointVector& seed,
                               const IkSettings& settings) {
  if (!pose_reachable(target)) {
    throw UnreachableError("inverse_kinematics: target outside workspace");
  }
  JointVector q = seed;
  const double lambda2 = settings.damping * settings.damping;
  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    const Pose2 fk = forward_kinematics(q);
    const double ex = target.x - fk.x;
    const double ey = target.y - fk.y;
    const double et = wrap_angle(target.theta - fk.theta);
    const double residual = std::hypot(ex, ey) + std::fabs(et);
    if (residual <= settings.tolerance) {
      for (double& a : q.q) a = wrap_angle(a);
      return q;
    }

    // Jacobian of (x, y, theta) with respect to the joint angles.
    double cum = 0.0;
    std::array<double, 3> px{}, py{};
    std::array<std::array<double, 3>, 3> jac{};
    for (int i = 0; i < 3; ++i) {
      cum += q.q[i];
      px[i] = kLinkLengths[i] * std::cos(cum);
      py[i] = kLinkLengths[i] * std::sin(cum);
    }
    for (int j = 0; j < 3; ++j) {
      double sx = 0.0, sy = 0.0;
      for (int i = j; i < 3; ++i) {
        sx -= py[i];
        sy += px[i];
      }
      jac[0][j] = sx;
      jac[1][j] = sy;
      jac[2][j] = 1.0;
    }

    // dq = J^T (J J^T + lambda^2 I)^-1 e
    std::array<std::array<double, 3>, 3> jjt{};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += jac[r][k] * jac[c][k];
        jjt[r][c] = s + (r == c ? lambda2 : 0.0);
      }
    }
    const std::array<double, 3> y = solve3(jjt, {ex, ey, et});
    for (int j = 0; j < 3; ++j) {
      double dq = 0.0;
      for (int r = 0; r < 3; ++r) dq += jac[r][j] * y[r];
      q.q[j] += clamp_abs(dq, settings.step_cap);
    }
  }
  throw NoConvergenceError("inverse_kinematics: iteration cap reached");
}

// ---------------------------------------------------------------------------
// Physics.
// ---------------------------------------------------------------------------

double grip_force(double object_width, double aperture) {
  if (aperture >= object_width) return 0.0;
  return kGripStiffness * (object_width - aperture);
}

namespace {

constexpr double kSupportHeight = 0.0;

void drop_object(WorldState& w, const std::string& id) {
  ObjectState& obj = *w.find_object(id);
  obj.height = kSupportHeight;
  w.remove_attachment(id, Attachment::Parent::EndEffector);
  if (!w.attachment_of(id, Attachment::Parent::EnvironmentResting)) {
    Attachment rest;
    rest.child = id;
    rest.parent = Attachment::Parent::EnvironmentResting;
    rest.surface = obj.rest_surface;
    w.attachments.push_back(rest);
  }
}

}  // namespace

WorldState physics_step(const WorldState& world, const Command& command) {
  WorldState w = world;

  // Command application.
  w.ee = apply_command_delta(w.ee, command);
  w.ee_lift = std::max(0.0, w.ee_lift + command.lift_delta);
  w.aperture =
      std::min(w.aperture_max, std::max(0.0, w.aperture + command.aperture_delta));
  w.wrist_force = 0.0;

  // Held object follows the end-effector rigidly.
  std::string held_id;
  if (const Attachment* held = w.held_attachment()) {
    held_id = held->child;
    ObjectState& obj = *w.find_object(held_id);
    obj.pose = compose_pose(w.ee, held->grip_offset);
    obj.height = std::max(kSupportHeight, w.ee_lift + held->grip_dz);
  }

  // Rigid environment constraints: project the child onto its circle and
  // carry the end-effector along when it holds the child.
  for (const Attachment& a : w.attachments) {
    if (a.parent != Attachment::Parent::EnvironmentRigid) continue;
    ObjectState& obj = *w.find_object(a.child);
    const Vec2 radial = obj.pose.position() - Vec2{a.hinge.x, a.hinge.y};
    const double dist = radial.norm();
    if (dist <= 0.0) continue;  // center-degenerate; leave untouched
    const Vec2 projected =
        Vec2{a.hinge.x, a.hinge.y} + radial * (a.radius / dist);
    const Vec2 correction = projected - obj.pose.position();
    w.wrist_force += kConstraintStiffness * correction.norm();
    obj.pose.x = projected.x;
    obj.pose.y = projected.y;
    if (a.child == held_id) {
      w.ee.x += correction.x;
      w.ee.y += correction.y;
    }
  }

  // Resting / slip transitions for the held object.
  bool dropped = false;
  if (!held_id.empty()) {
    ObjectState& obj = *w.find_object(held_id);
    const bool resting =
        w.attachment_of(held_id, Attachment::Parent::EnvironmentResting) !=
        nullptr;
    const bool raised = obj.height > kSupportHeight + kLiftBreak;
    if (raised) {
      const double force = grip_force(obj.width, w.aperture);
      if (force >= slip_threshold(obj.mass)) {
        if (resting) {
          w.remove_attachment(held_id, Attachment::Parent::EnvironmentResting);
        }
      } else {
        drop_object(w, held_id);
        dropped = true;
      }
    } else if (!resting && obj.height <= kSupportHeight &&
               !w.attachment_of(held_id, Attachment::Parent::EnvironmentRigid)) {
      // Lowered back onto the support: resting attachment re-established.
      Attachment rest;
      rest.child = held_id;
      rest.parent = Attachment::Parent::EnvironmentResting;
      rest.surface = obj.rest_surface;
      w.attachments.push_back(rest);
    }
  }

  // Contact state, grip force, and attachment formation/release.
  w.jaw_contacts = {false, false};
  w.jaw_torques = {0.0, 0.0};
  const Attachment* held = w.held_attachment();
  if (held != nullptr) {
    ObjectState& obj = *w.find_object(held->child);
    const double force = grip_force(obj.width, w.aperture);
    w.jaw_contacts = {true, true};
    w.jaw_torques = {force / 2.0, force / 2.0};
    if (force > kCrushForce) obj.crushed = true;
    if (force <= 0.0) {
      w.remove_attachment(held->child, Attachment::Parent::EndEffector);
      w.jaw_contacts.left = w.jaw_contacts.right = (w.aperture <= obj.width);
    }
  } else {
    // No current grasp: look for an object between the jaws.
    std::string best;
    double best_dist = 0.0;
    for (const auto& [id, obj] : w.objects) {
      if (dropped && id == held_id) continue;  // fell away this step
      const double d = planar_distance(w.ee, obj.pose);
      if (d > kGraspRange) continue;
      if (std::fabs(w.ee_lift - obj.height) >= kGraspHeightWindow) continue;
      if (best.empty() || d < best_dist) {
        best = id;
        best_dist = d;
      }
    }
    if (!best.empty()) {
      ObjectState& obj = *w.find_object(best);
      if (w.aperture <= obj.width) {
        const double force = grip_force(obj.width, w.aperture);
        w.jaw_contacts = {true, true};
        w.jaw_torques = {force / 2.0, force / 2.0};
        if (force > kCrushForce) obj.crushed = true;
        if (force > 0.0) {
          Attachment grasp;
          grasp.child = best;
          grasp.parent = Attachment::Parent::EndEffector;
          grasp.grip_offset = relative_pose(w.ee, obj.pose);
          grasp.grip_dz = obj.height - w.ee_lift;
          w.attachments.push_back(grasp);
        }
      }
    }
  }

  return w;
}

// ---------------------------------------------------------------------------
// Features and observations.
// ---------------------------------------------------------------------------

VisualFeatures feature_extract(const WorldState& world) {
  const ObjectState* target = world.find_object(world.target_id);
  if (target == nullptr) {
    throw MissingTargetError("feature_extract: no designated target object");
  }
  const Vec2 to_target = target->pose.position() - world.ee.position();
  const Vec2 heading = world.ee.heading();
  VisualFeatures f;
  f.target_distance = to_target.norm();
  f.lateral_offset = rot90_ccw(heading).dot(to_target);
  return f;
}

Observation postprocess(const VisualFeatures& features,
                        const ObservableState& observable) {
  return {observable.estimated_target_distance, features.lateral_offset,
          observable.aperture, observable.jaw_torques.left,
          observable.jaw_torques.right, observable.wrist_force};
}

// ---------------------------------------------------------------------------
// Engines.
// ---------------------------------------------------------------------------

std::string engine_role_name(EngineRole role) {
  switch (role) {
    case EngineRole::Kinematics: return "kinematics";
    case EngineRole::Physics: return "physics";
    case EngineRole::Feature: return "feature";
    case EngineRole::PostProcess: return "postprocess";
  }
  return "unknown";
}

EngineRole engine_role_from_name(const std::string& name) {
  if (name == "kinematics") return EngineRole::Kinematics;
  if (name == "physics") return EngineRole::Physics;
  if (name == "feature") return EngineRole::Feature;
  if (name == "postprocess") return EngineRole::PostProcess;
  throw ConfigurationError("unknown engine role: " + name);
}

namespace {

class KinematicsEngine final : public Engine {
 public:
  explicit KinematicsEngine(IkSettings ik = {}) : ik_(ik) {}
  EngineRole role() const override { return EngineRole::Kinematics; }

  void step(StepContext& ctx) override {
    const Pose2 start = ctx.world.ee;
    Pose2 target = apply_command_delta(start, ctx.command);
    if (!pose_reachable(target)) {
      // Shrink the motion to the workspace boundary (largest feasible
      // fraction of the commanded delta, fixed-count bisection).
      double lo = 0.0, hi = 1.0;
      for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        Command scaled = ctx.command;
        scaled.dx *= mid;
        scaled.dy *= mid;
        scaled.dtheta *= mid;
        if (pose_reachable(apply_command_delta(start, scaled))) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      ctx.command.dx *= lo;
      ctx.command.dy *= lo;
      ctx.command.dtheta *= lo;
      target = apply_command_delta(start, ctx.command);
    }
    try {
      ctx.world.joints = inverse_kinematics(target, ctx.world.joints, ik_);
    } catch (const Error&) {
      // Hold position when the solver cannot track the commanded pose.
      ctx.command.dx = 0.0;
      ctx.command.dy = 0.0;
      ctx.command.dtheta = 0.0;
    }
  }

 private:
  IkSettings ik_;
};

class PhysicsEngine final : public Engine {
 public:
  EngineRole role() const override { return EngineRole::Physics; }
  void step(StepContext& ctx) override {
    ctx.world = physics_step(ctx.world, ctx.command);
  }
};

class FeatureEngine final : public Engine {
 public:
  EngineRole role() const override { return EngineRole::Feature; }
  void step(StepContext& ctx) override {
    ctx.features = feature_extract(ctx.world);
    ctx.has_features = true;
  }
};

class PostProcessEngine final : public Engine {
 public:
  EngineRole role() const override { return EngineRole::PostProcess; }
  void step(StepContext& ctx) override {
    ctx.observation = postprocess(ctx.features, ctx.observable);
    ctx.has_observation = true;
  }
};

}  // namespace

std::unique_ptr<Engine> make_local_engine(EngineRole role) {
  switch (role) {
    case EngineRole::Kinematics: return std::make_unique<KinematicsEngine>();
    case EngineRole::Physics: return std::make_unique<PhysicsEngine>();
    case EngineRole::Feature: return std::make_unique<FeatureEngine>();
    case EngineRole::PostProcess: return std::make_unique<PostProcessEngine>();
  }
  throw ConfigurationError("make_local_engine: bad role");
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

EnginePipeline::EnginePipeline(std::vector<std::unique_ptr<Engine>> engines,
                               PipelineSettings settings)
    : engines_(std::move(engines)), settings_(settings) {
  if (engines_.size() != 4) {
    throw ConfigurationError("pipeline requires exactly one engine per role");
  }
  for (std::size_t i = 0; i < engines_.size(); ++i) {
    if (static_cast<int>(engines_[i]->role()) != static_cast<int>(i)) {
      throw ConfigurationError(
          "pipeline order must be kinematics < physics < feature < "
          "postprocess");
    }
  }
}

EnginePipeline EnginePipeline::local(PipelineSettings settings) {
  std::vector<std::unique_ptr<Engine>> engines;
  engines.push_back(make_local_engine(EngineRole::Kinematics));
  engines.push_back(make_local_engine(EngineRole::Physics));
  engines.push_back(make_local_engine(EngineRole::Feature));
  engines.push_back(make_local_engine(EngineRole::PostProcess));
  return EnginePipeline(std::move(engines), settings);
}

PipelineStepResult EnginePipeline::step(const WorldState& world,
                                        const Command& command) {
  StepContext ctx;
  ctx.world = world;
  ctx.command = clamp_command(command, settings_.limits);
  const std::uint64_t t = static_cast<std::uint64_t>(world.time_step);
  for (auto& engine : engines_) {
    try {
      engine->step(ctx);
    } catch (const std::exception& e) {
      throw EngineStepError(engine_role_name(engine->role()), e.what());
    }
    if (engine->role() == EngineRole::Physics) {
      ctx.observable = observable_projection(
          ctx.world, derive_seed(noise_seed_, {t << 1}), settings_.sigma_d);
      ctx.has_observable = true;
    }
  }
  ctx.world.time_step = world.time_step + 1;
  return {std::move(ctx.world), ctx.observation, std::move(ctx.observable)};
}

SenseResult EnginePipeline::observe(const WorldState& world) {
  StepContext ctx;
  ctx.world = world;
  const std::uint64_t t = static_cast<std::uint64_t>(world.time_step);
  ctx.observable = observable_projection(
      ctx.world, derive_seed(noise_seed_, {(t << 1) | 1}), settings_.sigma_d);
  ctx.has_observable = true;
  for (auto& engine : engines_) {
    const EngineRole r = engine->role();
    if (r != EngineRole::Feature && r != EngineRole::PostProcess) continue;
    try {
      engine->step(ctx);
    } catch (const std::exception& e) {
      throw EngineStepError(engine_role_name(r), e.what());
    }
  }
  return {ctx.observation, std::move(ctx.observable)};
}

}  // namespace taskseq
