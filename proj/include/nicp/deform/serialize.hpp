#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "nicp/deform/model.hpp"

namespace nicp::deform {

// {"nodes": [[x,y,z],...], "edges": [[j,k],...],
//  "influences": [[[node, weight],...], ...]}
nlohmann::json graph_to_json(const DeformationGraph& graph);
DeformationGraph graph_from_json(const nlohmann::json& j);

nlohmann::json skeleton_to_json(const Skeleton& skeleton);
Skeleton skeleton_from_json(const nlohmann::json& j);

nlohmann::json skin_weights_to_json(const std::vector<std::vector<SkinWeight>>& weights);
std::vector<std::vector<SkinWeight>> skin_weights_from_json(const nlohmann::json& j);

// {"rotations": [[...],...], "root_translation": [x,y,z]}
nlohmann::json pose_to_json(const BodyPose& pose);
BodyPose pose_from_json(const nlohmann::json& j);

// Flat array of length 6K.
nlohmann::json params_to_json(const GraphParams& params);
GraphParams params_from_json(const nlohmann::json& j);

// Flat little-endian float64 array of length 6K, no header.
void write_params_binary(const std::filesystem::path& path, const GraphParams& params);
GraphParams read_params_binary(const std::filesystem::path& path);

}  // namespace nicp::deform
