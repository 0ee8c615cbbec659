#include "nicp/deform/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace nicp::deform {
namespace {

nlohmann::json vec_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json graph_to_json(const DeformationGraph& graph) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : graph.nodes) j["nodes"].push_back(vec_to_json(n));
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : graph.edges) j["edges"].push_back({a, b});
  j["influences"] = nlohmann::json::array();
  for (const auto& list : graph.influences) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& inf : list) row.push_back({inf.node, inf.weight});
    j["influences"].push_back(std::move(row));
  }
  return j;
}

DeformationGraph graph_from_json(const nlohmann::json& j) {
  DeformationGraph g;
  for (const auto& n : j.at("nodes")) g.nodes.push_back(vec_from_json(n));
  for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  for (const auto& row : j.at("influences")) {
    std::vector<NodeInfluence> list;
    for (const auto& inf : row) list.push_back({inf.at(0).get<int>(), inf.at(1).get<double>()});
    g.influences.push_back(std::move(list));
  }
  g.validate();
  return g;
}

nlohmann::json skeleton_to_json(const Skeleton& skeleton) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& joint : skeleton.joints) {
    j.push_back({{"name", joint.name}, {"parent", joint.parent}, {"pivot", vec_to_json(joint.pivot)}});
  }
  return j;
}

Skeleton skeleton_from_json(const nlohmann::json& j) {
  Skeleton s;
  for (const auto& joint : j) {
    s.joints.push_back({joint.at("name").get<std::string>(), joint.at("parent").get<int>(),
                        vec_from_json(joint.at("pivot"))});
  }
  s.validate();
  return s;
}

nlohmann::json skin_weights_to_json(const std::vector<std::vector<SkinWeight>>& weights) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& list : weights) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& w : list) row.push_back({w.joint, w.weight});
    j.push_back(std::move(row));
  }
  return j;
}

std::vector<std::vector<SkinWeight>> skin_weights_from_json(const nlohmann::json& j) {
  std::vector<std::vector<SkinWeight>> out;
  for (const auto& row : j) {
    std::vector<SkinWeight> list;
    for (const auto& w : row) list.push_back({w.at(0).get<int>(), w.at(1).get<double>()});
    out.push_back(std::move(list));
  }
  return out;
}

nlohmann::json pose_to_json(const BodyPose& pose) {
  nlohmann::json j;
  j["rotations"] = nlohmann::json::array();
  for (const auto& r : pose.rotations) j["rotations"].push_back(vec_to_json(r));
  j["root_translation"] = vec_to_json(pose.root_translation);
  return j;
}

BodyPose pose_from_json(const nlohmann::json& j) {
  BodyPose p;
  for (const auto& r : j.at("rotations")) p.rotations.push_back(vec_from_json(r));
  p.root_translation = vec_from_json(j.at("root_translation"));
  return p;
}

nlohmann::json params_to_json(const GraphParams& params) {
  const auto& v = params.vector();
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

GraphParams params_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return GraphParams(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

void write_params_binary(const std::filesystem::path& path, const GraphParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(params.vector().data()),
            static_cast<std::streamsize>(params.size() * static_cast<Eigen::Index>(sizeof(double))));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

GraphParams read_params_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % (6 * sizeof(double)) != 0) throw std::runtime_error("params file length is not 6K doubles");
  in.seekg(0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(bytes / sizeof(double)));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  return GraphParams(std::move(v));
}

}  // namespace nicp::deform
