#include "taskseq/codec.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "taskseq/errors.hpp"

namespace taskseq {

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw MalformedStateError(why, 0);
}

const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

double req_double(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) {
    malformed(std::string("field '") + key + "' must be a hex-float string");
  }
  return decode_double(v.get<std::string>());
}

std::string req_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) {
    malformed(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

bool req_bool(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_boolean()) {
    malformed(std::string("field '") + key + "' must be a boolean");
  }
  return v.get<bool>();
}

}  // namespace

std::string encode_double(double v) {
  if (!std::isfinite(v)) {
    throw Error("encode_double: non-finite value rejected");
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double decode_double(const std::string& s) {
  if (s.empty()) malformed("empty real literal");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) {
    malformed("bad real literal '" + s + "'");
  }
  return v;
}

Json pose_to_json(const Pose2& p) {
  return Json{{"x", encode_double(p.x)},
              {"y", encode_double(p.y)},
              {"theta", encode_double(p.theta)}};
}

Pose2 pose_from_json(const Json& j) {
  return {req_double(j, "x"), req_double(j, "y"), req_double(j, "theta")};
}

namespace {

std::string parent_name(Attachment::Parent p) {
  switch (p) {
    case Attachment::Parent::EnvironmentRigid: return "environment_rigid";
    case Attachment::Parent::EnvironmentResting: return "environment_resting";
    case Attachment::Parent::EndEffector: return "end_effector";
  }
  return "";
}

Attachment::Parent parent_from_name(const std::string& s) {
  if (s == "environment_rigid") return Attachment::Parent::EnvironmentRigid;
  if (s == "environment_resting") return Attachment::Parent::EnvironmentResting;
  if (s == "end_effector") return Attachment::Parent::EndEffector;
  malformed("unknown attachment parent '" + s + "'");
}

}  // namespace

Json world_to_json(const WorldState& w) {
  Json joints = Json::array();
  for (double q : w.joints.q) joints.push_back(encode_double(q));

  Json objects = Json::object();
  for (const auto& [id, obj] : w.objects) {
    objects[id] = Json{{"pose", pose_to_json(obj.pose)},
                       {"height", encode_double(obj.height)},
                       {"width", encode_double(obj.width)},
                       {"mass", encode_double(obj.mass)},
                       {"crushed", obj.crushed},
                       {"rest_surface", obj.rest_surface}};
  }

  Json attachments = Json::array();
  for (const auto& a : w.attachments) {
    Json ja{{"child", a.child}, {"parent", parent_name(a.parent)}};
    switch (a.parent) {
      case Attachment::Parent::EnvironmentRigid:
        ja["hinge"] = pose_to_json(a.hinge);
        ja["radius"] = encode_double(a.radius);
        break;
      case Attachment::Parent::EnvironmentResting:
        ja["surface"] = a.surface;
        break;
      case Attachment::Parent::EndEffector:
        ja["grip_offset"] = pose_to_json(a.grip_offset);
        ja["grip_dz"] = encode_double(a.grip_dz);
        break;
    }
    attachments.push_back(std::move(ja));
  }

  return Json{{"joints", std::move(joints)},
              {"ee", pose_to_json(w.ee)},
              {"ee_lift", encode_double(w.ee_lift)},
              {"aperture", encode_double(w.aperture)},
              {"aperture_max", encode_double(w.aperture_max)},
              {"objects", std::move(objects)},
              {"attachments", std::move(attachments)},
              {"target_id", w.target_id},
              {"wrist_force", encode_double(w.wrist_force)},
              {"jaw_contacts",
               Json{{"left", w.jaw_contacts.left},
                    {"right", w.jaw_contacts.right}}},
              {"jaw_torques",
               Json{{"left", encode_double(w.jaw_torques.left)},
                    {"right", encode_double(w.jaw_torques.right)}}},
              {"time_step", w.time_step}};
}

WorldState world_from_json(const Json& j) {
  if (!j.is_object()) malformed("state must be an object");
  WorldState w;

  const Json& joints = require(j, "joints");
  if (!joints.is_array() || joints.size() != 3) {
    malformed("'joints' must be an array of 3 angles");
  }
  for (int i = 0; i < 3; ++i) {
    if (!joints[i].is_string()) malformed("'joints' entries must be strings");
    w.joints.q[i] = decode_double(joints[i].get<std::string>());
  }

  w.ee = pose_from_json(require(j, "ee"));
  w.ee_lift = req_double(j, "ee_lift");
  w.aperture = req_double(j, "aperture");
  w.aperture_max = req_double(j, "aperture_max");
  w.target_id = req_string(j, "target_id");
  w.wrist_force = req_double(j, "wrist_force");

  const Json& contacts = require(j, "jaw_contacts");
  w.jaw_contacts.left = req_bool(contacts, "left");
  w.jaw_contacts.right = req_bool(contacts, "right");
  const Json& torques = require(j, "jaw_torques");
  w.jaw_torques.left = req_double(torques, "left");
  w.jaw_torques.right = req_double(torques, "right");

  const Json& ts = require(j, "time_step");
  if (!ts.is_number_integer()) malformed("'time_step' must be an integer");
  w.time_step = ts.get<std::int64_t>();

  const Json& objects = require(j, "objects");
  if (!objects.is_object()) malformed("'objects' must be an object");
  for (auto it = objects.begin(); it != objects.end(); ++it) {
    const Json& jo = it.value();
    ObjectState obj;
    obj.pose = pose_from_json(require(jo, "pose"));
    obj.height = req_double(jo, "height");
    obj.width = req_double(jo, "width");
    obj.mass = req_double(jo, "mass");
    obj.crushed = req_bool(jo, "crushed");
    obj.rest_surface = req_string(jo, "rest_surface");
    w.objects.emplace(it.key(), std::move(obj));
  }

  const Json& attachments = require(j, "attachments");
  if (!attachments.is_array()) malformed("'attachments' must be an array");
  for (const Json& ja : attachments) {
    Attachment a;
    a.child = req_string(ja, "child");
    a.parent = parent_from_name(req_string(ja, "parent"));
    switch (a.parent) {
      case Attachment::Parent::EnvironmentRigid:
        a.hinge = pose_from_json(require(ja, "hinge"));
        a.radius = req_double(ja, "radius");
        break;
      case Attachment::Parent::EnvironmentResting:
        a.surface = req_string(ja, "surface");
        break;
      case Attachment::Parent::EndEffector:
        a.grip_offset = pose_from_json(require(ja, "grip_offset"));
        a.grip_dz = req_double(ja, "grip_dz");
        break;
    }
    w.attachments.push_back(std::move(a));
  }

  return w;
}

Json observable_to_json(const ObservableState& o) {
  Json joints = Json::array();
  for (double q : o.joints.q) joints.push_back(encode_double(q));
  return Json{
      {"joints", std::move(joints)},
      {"ee", pose_to_json(o.ee)},
      {"aperture", encode_double(o.aperture)},
      {"wrist_force", encode_double(o.wrist_force)},
      {"jaw_contacts",
       Json{{"left", o.jaw_contacts.left}, {"right", o.jaw_contacts.right}}},
      {"jaw_torques", Json{{"left", encode_double(o.jaw_torques.left)},
                           {"right", encode_double(o.jaw_torques.right)}}},
      {"estimated_target_distance",
       encode_double(o.estimated_target_distance)}};
}

ObservableState observable_from_json(const Json& j) {
  ObservableState o;
  const Json& joints = require(j, "joints");
  if (!joints.is_array() || joints.size() != 3) {
    malformed("'joints' must be an array of 3 angles");
  }
  for (int i = 0; i < 3; ++i) {
    o.joints.q[i] = decode_double(joints[i].get<std::string>());
  }
  o.ee = pose_from_json(require(j, "ee"));
  o.aperture = req_double(j, "aperture");
  o.wrist_force = req_double(j, "wrist_force");
  const Json& contacts = require(j, "jaw_contacts");
  o.jaw_contacts.left = req_bool(contacts, "left");
  o.jaw_contacts.right = req_bool(contacts, "right");
  const Json& torques = require(j, "jaw_torques");
  o.jaw_torques.left = req_double(torques, "left");
  o.jaw_torques.right = req_double(torques, "right");
  o.estimated_target_distance = req_double(j, "estimated_target_distance");
  return o;
}

Json command_to_json(const Command& c) {
  return Json{{"dx", encode_double(c.dx)},
              {"dy", encode_double(c.dy)},
              {"dtheta", encode_double(c.dtheta)},
              {"aperture_delta", encode_double(c.aperture_delta)},
              {"lift_delta", encode_double(c.lift_delta)}};
}

Command command_from_json(const Json& j) {
  Command c;
  c.dx = req_double(j, "dx");
  c.dy = req_double(j, "dy");
  c.dtheta = req_double(j, "dtheta");
  c.aperture_delta = req_double(j, "aperture_delta");
  c.lift_delta = req_double(j, "lift_delta");
  return c;
}

Json features_to_json(const VisualFeatures& f) {
  return Json{{"target_distance", encode_double(f.target_distance)},
              {"lateral_offset", encode_double(f.lateral_offset)}};
}

VisualFeatures features_from_json(const Json& j) {
  VisualFeatures f;
  f.target_distance = req_double(j, "target_distance");
  f.lateral_offset = req_double(j, "lateral_offset");
  return f;
}

Json observation_to_json(const Observation& o) {
  Json arr = Json::array();
  for (double v : o) arr.push_back(encode_double(v));
  return arr;
}

Observation observation_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 6) {
    malformed("observation must be an array of 6 reals");
  }
  Observation o{};
  for (int i = 0; i < 6; ++i) {
    if (!j[i].is_string()) malformed("observation entries must be strings");
    o[i] = decode_double(j[i].get<std::string>());
  }
  return o;
}

Json step_context_to_json(const StepContext& ctx) {
  Json j{{"state", world_to_json(ctx.world)},
         {"command", command_to_json(ctx.command)}};
  if (ctx.has_features) j["features"] = features_to_json(ctx.features);
  if (ctx.has_observable) j["observable"] = observable_to_json(ctx.observable);
  if (ctx.has_observation) {
    j["observation"] = observation_to_json(ctx.observation);
  }
  return j;
}

StepContext step_context_from_json(const Json& j) {
  StepContext ctx;
  ctx.world = world_from_json(require(j, "state"));
  ctx.command = command_from_json(require(j, "command"));
  if (j.contains("features")) {
    ctx.features = features_from_json(j["features"]);
    ctx.has_features = true;
  }
  if (j.contains("observable")) {
    ctx.observable = observable_from_json(j["observable"]);
    ctx.has_observable = true;
  }
  if (j.contains("observation")) {
    ctx.observation = observation_from_json(j["observation"]);
    ctx.has_observation = true;
  }
  return ctx;
}

std::string encode_state(const WorldState& w) { return world_to_json(w).dump(); }

WorldState decode_state(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MalformedStateError(e.what(), e.byte);
  }
  return world_from_json(j);
}

}  // namespace taskseq
