#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskseq/concept_model.hpp"

namespace taskseq {

// ---------------------------------------------------------------------------
// Circle fitting (door parameter estimation).
// ---------------------------------------------------------------------------

struct CircleFitResult {
  Vec2 center{};
  double radius = 0.0;
};

/// Algebraic least-squares circle through the points (centered Kasa
/// fit). Throws IllConditionedError when the points are collinear
/// (normal-equation determinant within 1e-12).
CircleFitResult circle_fit(const std::vector<Vec2>& points);

// ---------------------------------------------------------------------------
// Grasp (learned).
// ---------------------------------------------------------------------------

/// Fixed feature/action scaling for the linear grasp policy, chosen so
/// useful parameters sit at O(1). Part of the "linear6x4" family
/// definition and therefore of the params-file contract.
inline constexpr std::array<double, 6> kGraspObsScale{0.4,  0.04, 0.15,
                                                      10.0, 10.0, 10.0};
inline constexpr std::array<double, 3> kGraspActScale{0.05, 0.05, 0.01};
inline constexpr int kGraspParamCount = 24;
inline constexpr const char* kGraspPolicyFamily = "linear6x4";

/// Linear policy: scaled observation (6) -> [advance, lateral, close,
/// terminate-logit] via a 6x4 matrix, row-major by observation index.
/// Advance/lateral act along and across the configured approach axis;
/// terminate fires on a positive logit.
class GraspPolicy final : public Policy {
 public:
  explicit GraspPolicy(double approach_axis = 0.0);

  PolicyKind kind() const override { return PolicyKind::Learned; }
  int param_count() const override { return kGraspParamCount; }
  void set_params(std::span<const double> params) override;
  std::vector<double> params() const override;
  ActionDecision act(const Observation& obs, const ObservableState& observable,
                     const WorldState* world) override;

 private:
  double approach_axis_;
  std::array<double, kGraspParamCount> w_{};
};

/// Reference parameters that approach, center, close to a firm grip, and
/// terminate once both jaw torques carry the load. Used as a smoke
/// oracle by tests and examples.
std::vector<double> hand_built_grasp_params();

struct GraspTaskConfig {
  std::pair<double, double> width_range{0.04, 0.12};
  double object_mass = 0.2;
  std::pair<double, double> distance_range{0.2, 0.4};
  std::pair<double, double> lateral_range{-0.04, 0.04};
  double approach_axis = 0.0;
  double aperture_max = 0.15;
  int max_steps = 40;
  std::vector<std::string> subsequent_tasks{"pick"};  // sufficient goal
};

ConceptModel make_grasp_model(const GraspTaskConfig& config = {});

// ---------------------------------------------------------------------------
// Pick / bring / place / release (programmed).
// ---------------------------------------------------------------------------

struct PickTaskConfig {
  double lift_height = 0.05;
  int max_steps = 12;
};
ConceptModel make_pick_model(const PickTaskConfig& config = {});

struct BringTaskConfig {
  double dx = 0.3;
  double dy = 0.0;
  double dtheta = 0.0;
  double tolerance = 1e-3;
  int max_steps = 60;
};
ConceptModel make_bring_model(const BringTaskConfig& config = {});

struct PlaceTaskConfig {
  int max_steps = 12;
};
ConceptModel make_place_model(const PlaceTaskConfig& config = {});

struct DropRegion {
  Vec2 center{};
  double radius = 0.0;
};

struct ReleaseTaskConfig {
  double retreat_distance = 0.05;
  int max_steps = 20;
  std::optional<DropRegion> region;  // e.g. a receptacle to land in
};
ConceptModel make_release_model(const ReleaseTaskConfig& config = {});

// ---------------------------------------------------------------------------
// Door opening (parameter-estimating).
// ---------------------------------------------------------------------------

struct DoorEstimatorState {
  std::vector<Vec2> samples;  // end-effector positions
  Vec2 center_est{};
  double radius_est = 0.0;
  double angle_progress = 0.0;  // signed, recomputed against the fit
  bool has_fit = false;
};

struct DoorTaskConfig {
  Vec2 hinge{0.2, 0.2};
  std::pair<double, double> radius_range{0.4, 1.0};
  double initial_angle = 0.0;
  double target_angle = 60.0 * kPi / 180.0;  // signed; + is CCW
  double angle_epsilon = 2.0 * kPi / 180.0;
  double arc_step = 0.02;
  double max_wrist_force = 15.0;  // stress limit f_max
  double handle_width = 0.04;
  double handle_mass = 0.1;
  double grip_aperture = 0.02;
  int max_steps = 120;
};

/// Updates the circle estimate from the motion history every step and
/// follows the estimated tangent; two probing steps perpendicular to the
/// approach axis bootstrap the fit. Reads only observable state.
class DoorPolicy final : public Policy {
 public:
  explicit DoorPolicy(const DoorTaskConfig& config);

  PolicyKind kind() const override { return PolicyKind::Programmed; }
  void begin_episode(const WorldState& start) override;
  ActionDecision act(const Observation& obs, const ObservableState& observable,
                     const WorldState* world) override;
  std::map<std::string, double> diagnostics() const override;

  const DoorEstimatorState& estimator() const { return estimator_; }

 private:
  DoorTaskConfig config_;
  double direction_ = 1.0;
  DoorEstimatorState estimator_;
};

ConceptModel make_door_model(const DoorTaskConfig& config = {});

// ---------------------------------------------------------------------------
// Helpers shared by the model builders.
// ---------------------------------------------------------------------------

/// Deterministic joint solution for an initial end-effector pose; tries
/// a fixed list of seed configurations before giving up.
JointVector solve_initial_joints(const Pose2& ee);

}  // namespace taskseq
