#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskseq/geometry.hpp"

namespace taskseq {

/// Joint angles of the planar 3-link arm, radians, each in [-pi, pi].
struct JointVector {
  std::array<double, 3> q{0.0, 0.0, 0.0};
};

/// A rigid body in the world. Pose and height are simulation state;
/// width and mass are non-observable physical properties. `crushed`
/// latches when grip force ever exceeds the crush limit.
struct ObjectState {
  Pose2 pose{};
  double height = 0.0;  // elevation above the support plane
  double width = 0.0;
  double mass = 0.0;
  bool crushed = false;
  std::string rest_surface = "table";
};

struct Attachment {
  enum class Parent { EnvironmentRigid, EnvironmentResting, EndEffector };

  std::string child;  // object id
  Parent parent = Parent::EnvironmentResting;

  // EnvironmentRigid: hinge anchor. (x, y) is the rotation center and
  // theta records the child's angle on the circle at attach time.
  Pose2 hinge{};
  double radius = 0.0;

  // EnvironmentResting: the support surface.
  std::string surface = "table";

  // EndEffector: fixed grasp offset (child pose relative to the
  // end-effector), plus the vertical component.
  Pose2 grip_offset{};
  double grip_dz = 0.0;
};

struct JawContacts {
  bool left = false;
  bool right = false;
  bool bilateral() const { return left && right; }
};

struct JawTorques {
  double left = 0.0;
  double right = 0.0;
};

/// Full simulation state shared by every engine, task, and policy.
struct WorldState {
  JointVector joints{};
  Pose2 ee{};
  double ee_lift = 0.0;  // gripper elevation above the support plane
  double aperture = 0.0;
  double aperture_max = 0.15;
  std::map<std::string, ObjectState> objects;  // ordered for determinism
  std::vector<Attachment> attachments;
  std::string target_id;  // object the feature engine tracks ("" = none)
  double wrist_force = 0.0;
  JawContacts jaw_contacts{};
  JawTorques jaw_torques{};
  std::int64_t time_step = 0;

  const ObjectState* find_object(const std::string& id) const;
  ObjectState* find_object(const std::string& id);
  const Attachment* held_attachment() const;  // end-effector attachment
  const Attachment* attachment_of(const std::string& id,
                                  Attachment::Parent parent) const;
  void remove_attachment(const std::string& id, Attachment::Parent parent);
};

/// The slice of WorldState a real robot could observe, plus the noisy
/// target-distance estimate. Object width and mass are absent by
/// construction.
struct ObservableState {
  JointVector joints{};
  Pose2 ee{};
  double aperture = 0.0;
  double wrist_force = 0.0;
  JawContacts jaw_contacts{};
  JawTorques jaw_torques{};
  double estimated_target_distance = 0.0;
};

/// Fixed 6-vector fed to learned policies:
/// [estimated_target_distance, lateral_offset, aperture,
///  jaw_torque_left, jaw_torque_right, wrist_force]
using Observation = std::array<double, 6>;

/// Copies the observable fields and estimates the target distance as
/// true planar distance plus seeded Gaussian noise of scale sigma_d.
/// Deterministic per (world, noise_seed, sigma_d). Worlds without a
/// designated target report distance 0.
ObservableState observable_projection(const WorldState& world,
                                      std::uint64_t noise_seed,
                                      double sigma_d);

}  // namespace taskseq
