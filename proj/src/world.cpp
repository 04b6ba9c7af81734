#include "taskseq/world.hpp"

#include <algorithm>

#include "taskseq/rng.hpp"

namespace taskseq {

const ObjectState* WorldState::find_object(const std::string& id) const {
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

ObjectState* WorldState::find_object(const std::string& id) {
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

const Attachment* WorldState::held_attachment() const {
  for (const auto& a : attachments) {
    if (a.parent == Attachment::Parent::EndEffector) return &a;
  }
  return nullptr;
}

const Attachment* WorldState::attachment_of(const std::string& id,
                                            Attachment::Parent parent) const {
  for (const auto& a : attachments) {
    if (a.child == id && a.parent == parent) return &a;
  }
  return nullptr;
}

void WorldState::remove_attachment(const std::string& id,
                                   Attachment::Parent parent) {
  attachments.erase(
      std::remove_if(attachments.begin(), attachments.end(),
                     [&](const Attachment& a) {
                       return a.child == id && a.parent == parent;
                     }),
      attachments.end());
}

ObservableState observable_projection(const WorldState& world,
                                      std::uint64_t noise_seed,
                                      double sigma_d) {
  ObservableState o;
  o.joints = world.joints;
  o.ee = world.ee;
  o.aperture = world.aperture;
  o.wrist_force = world.wrist_force;
  o.jaw_contacts = world.jaw_contacts;
  o.jaw_torques = world.jaw_torques;

  double true_distance = 0.0;
  if (const ObjectState* target = world.find_object(world.target_id)) {
    true_distance = planar_distance(world.ee, target->pose);
  }
  double noise = 0.0;
  if (sigma_d > 0.0) {
    Rng rng(noise_seed);
    noise = sigma_d * rng.gaussian();
  }
  o.estimated_target_distance = true_distance + noise;
  return o;
}

}  // namespace taskseq
