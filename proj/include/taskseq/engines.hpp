#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "taskseq/world.hpp"

namespace taskseq {

// ---------------------------------------------------------------------------
// Physical constants of the simulated system.
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 3> kLinkLengths{1.0, 1.0, 0.5};
inline constexpr double kMaxReach = 2.5;        // sum of link lengths
inline constexpr double kGripStiffness = 500.0;  // N/m, jaw spring
inline constexpr double kCrushForce = 20.0;      // N, latches `crushed`
inline constexpr double kConstraintStiffness = 1000.0;  // N/m, hinge spring
inline constexpr double kGravity = 9.81;
inline constexpr double kLiftAccel = 2.0;   // m/s^2 load factor when lifting
inline constexpr double kFriction = 0.5;    // jaw-object friction coefficient
inline constexpr double kGraspRange = 0.02;      // m, planar reach of the jaws
inline constexpr double kGraspHeightWindow = 0.01;  // m, vertical reach
inline constexpr double kLiftBreak = 0.01;  // m, lift that breaks resting

/// Minimum grip force to hold an object of the given mass against
/// gravity plus the lift acceleration.
inline double slip_threshold(double mass) {
  return mass * (kGravity + kLiftAccel) / kFriction;
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

struct CommandLimits {
  double translation = 0.05;  // m per step, per axis
  double rotation = 0.2;      // rad per step
  double aperture = 0.02;     // m per step
  double lift = 0.02;         // m per step
};

struct Command {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
  double aperture_delta = 0.0;
  double lift_delta = 0.0;
};

Command clamp_command(const Command& c, const CommandLimits& limits = {});
bool command_within_limits(const Command& c, const CommandLimits& limits = {});

/// World-frame pose reached by applying a command's planar deltas.
inline Pose2 apply_command_delta(const Pose2& p, const Command& c) {
  return {p.x + c.dx, p.y + c.dy, wrap_angle(p.theta + c.dtheta)};
}

// ---------------------------------------------------------------------------
// Kinematics.
// ---------------------------------------------------------------------------

struct IkSettings {
  double damping = 0.1;     // damped-least-squares lambda
  double step_cap = 0.2;    // rad per iteration, per joint
  int max_iterations = 200;
  double tolerance = 1e-6;  // position (m) + angle (rad), summed
};

Pose2 forward_kinematics(const JointVector& joints);

/// True when the pose is inside the workspace: position within total
/// reach and the implied wrist position within the first two links.
bool pose_reachable(const Pose2& target);

/// Damped-least-squares IK. Throws UnreachableError for targets outside
/// the workspace and NoConvergenceError when the iteration cap is hit
/// (callers may retry with a different seed configuration).
JointVector inverse_kinematics(const Pose2& target, const JointVector& seed,
                               const IkSettings& settings = {});

// ---------------------------------------------------------------------------
// Physics.
// ---------------------------------------------------------------------------

/// Jaw spring force: k * (width - aperture) when the jaws squeeze the
/// object, zero once the aperture clears the width.
double grip_force(double object_width, double aperture);

/// Quasi-static step: applies the command, then enforces attachments
/// (rigid follow, hinge-circle projection, resting/slip transitions) and
/// refreshes contact state. Failures (drops, crushing) are state flags,
/// never exceptions. Does not advance time_step; the pipeline does.
WorldState physics_step(const WorldState& world, const Command& command);

// ---------------------------------------------------------------------------
// Features and observations.
// ---------------------------------------------------------------------------

struct VisualFeatures {
  double target_distance = 0.0;  // true planar distance ee -> target
  double lateral_offset = 0.0;   // perpendicular to the ee heading
};

/// Geometric stand-in for rendered-image features. Throws
/// MissingTargetError when the world designates no target object.
VisualFeatures feature_extract(const WorldState& world);

/// Assembles the fixed 6-vector observation.
Observation postprocess(const VisualFeatures& features,
                        const ObservableState& observable);

// ---------------------------------------------------------------------------
// Engine pipeline.
// ---------------------------------------------------------------------------

enum class EngineRole { Kinematics, Physics, Feature, PostProcess };

std::string engine_role_name(EngineRole role);
EngineRole engine_role_from_name(const std::string& name);

/// Everything a step threads through the engines. Remote engines receive
/// and return this context verbatim (hex-float encoded), which is what
/// makes backends interchangeable bit-for-bit.
struct StepContext {
  WorldState world;
  Command command;
  VisualFeatures features{};
  ObservableState observable{};
  Observation observation{};
  bool has_features = false;
  bool has_observable = false;
  bool has_observation = false;
};

class Engine {
 public:
  virtual ~Engine() = default;
  virtual EngineRole role() const = 0;
  virtual void step(StepContext& ctx) = 0;
  virtual void reset() {}
};

std::unique_ptr<Engine> make_local_engine(EngineRole role);

struct PipelineSettings {
  double sigma_d = 0.01;          // distance-estimate noise scale
  CommandLimits limits{};
  IkSettings ik{};
};

struct PipelineStepResult {
  WorldState world;
  Observation observation{};
  ObservableState observable{};
};

struct SenseResult {
  Observation observation{};
  ObservableState observable{};
};

/// Ordered kinematics -> physics -> feature -> post-process pipeline.
/// Construction validates the ordering invariant. One instance serves
/// one episode at a time; the per-episode noise stream is reseeded via
/// set_noise_seed.
class EnginePipeline {
 public:
  EnginePipeline(std::vector<std::unique_ptr<Engine>> engines,
                 PipelineSettings settings = {});

  static EnginePipeline local(PipelineSettings settings = {});

  void set_noise_seed(std::uint64_t seed) { noise_seed_ = seed; }
  const PipelineSettings& settings() const { return settings_; }

  /// Runs every engine in order and advances time_step by one.
  /// Engine failures are annotated with the failing role.
  PipelineStepResult step(const WorldState& world, const Command& command);

  /// Sense-only pass (feature + post-process on the current world),
  /// used for the first observation of an episode.
  SenseResult observe(const WorldState& world);

 private:
  std::vector<std::unique_ptr<Engine>> engines_;
  PipelineSettings settings_;
  std::uint64_t noise_seed_ = 0;
};

}  // namespace taskseq
