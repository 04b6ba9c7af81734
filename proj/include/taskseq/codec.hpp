#pragma once

#include <string>

#include "json.hpp"
#include "taskseq/engines.hpp"
#include "taskseq/world.hpp"

namespace taskseq {

using Json = nlohmann::json;

/// Reals are rendered as IEEE-754 double hex literals ("0x1.9ap-4") so
/// that every encode/decode round trip is bit-identical. Non-finite
/// values are rejected at encode time.
std::string encode_double(double v);
double decode_double(const std::string& s);

Json pose_to_json(const Pose2& p);
Pose2 pose_from_json(const Json& j);

Json world_to_json(const WorldState& w);
WorldState world_from_json(const Json& j);

Json observable_to_json(const ObservableState& o);
ObservableState observable_from_json(const Json& j);

Json command_to_json(const Command& c);
Command command_from_json(const Json& j);

Json features_to_json(const VisualFeatures& f);
VisualFeatures features_from_json(const Json& j);

Json observation_to_json(const Observation& o);
Observation observation_from_json(const Json& j);

Json step_context_to_json(const StepContext& ctx);
StepContext step_context_from_json(const Json& j);

/// Canonical text encoding of a world state: one-line JSON, sorted keys,
/// hex-float reals. decode(encode(w)) == w bit-for-bit.
std::string encode_state(const WorldState& w);
WorldState decode_state(const std::string& text);

}  // namespace taskseq
