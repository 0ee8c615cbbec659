#include "nicp/bench/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

#include "nicp/deform/serialize.hpp"
#include "nicp/geometry/io.hpp"
#include "nicp/sensing/depth.hpp"
#include "nicp/sensing/garment.hpp"

namespace nicp::bench {

namespace fs = std::filesystem;
using nlohmann::json;

Split split_frames(int frame_count, double heldout_fraction) {
  const int heldout = static_cast<int>(frame_count * heldout_fraction + 0.5);
  if (frame_count < 2 || heldout < 1 || heldout >= frame_count) {
    throw ValidationError("cannot split " + std::to_string(frame_count) + " frames into training and held-out sets");
  }
  Split split;
  for (int i = 0; i < frame_count; ++i) (i < frame_count - heldout ? split.train : split.heldout).push_back(i);
  return split;
}

DeformationModel build_model(const ExperimentConfig& config) {
  DeformationModel model;
  model.skin = sensing::make_garment(config.garment);
  model.graph = deform::build_graph(model.skin.rest, static_cast<std::size_t>(config.node_count), config.graph);
  model.validate();
  return model;
}

std::string frame_directory(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d", id);
  return buf;
}

std::string hex32(std::uint32_t value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", value);
  return buf;
}

std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace

json write_dataset(const fs::path& root, const DeformationModel& model, const sensing::SyntheticSequence& sequence,
                   const std::string& config_hash, std::uint64_t seed) {
  fs::create_directories(root);
  json files = json::object();
  auto track = [&](const std::string& name) { files[name] = hex32(file_crc32(root / name)); };

  geometry::write_ply_mesh(root / "template.ply", model.skin.rest);
  track("template.ply");
  const json model_json = {{"skeleton", deform::skeleton_to_json(model.skin.skeleton)},
                           {"skin_weights", deform::skin_weights_to_json(model.skin.weights)},
                           {"graph", deform::graph_to_json(model.graph)}};
  write_text(root / "model.json", model_json.dump() + "\n");
  track("model.json");

  json cams = json::array();
  for (const auto& c : sequence.cameras) cams.push_back(sensing::camera_json(c));
  write_text(root / "cameras.json", cams.dump(2) + "\n");
  track("cameras.json");

  for (const auto& f : sequence.frames) {
    const std::string dir = frame_directory(f.id);
    fs::create_directories(root / dir);
    geometry::write_ply_mesh(root / dir / "mesh.ply", f.mesh);
    geometry::write_ply_cloud(root / dir / "dense.ply", f.dense);
    geometry::write_ply_cloud(root / dir / "sparse.ply", f.sparse);
    const json pose = {{"id", f.id}, {"pose", deform::pose_to_json(f.pose)}, {"theta", deform::params_to_json(f.theta)}};
    write_text(root / dir / "pose.json", pose.dump() + "\n");
    for (const char* name : {"mesh.ply", "dense.ply", "sparse.ply", "pose.json"}) track(dir + "/" + name);
  }

  const json manifest = {{"format", "nicp-dataset"},
                         {"version", 1},
                         {"frames", sequence.frames.size()},
                         {"cameras", sequence.cameras.size()},
                         {"node_count", model.graph.node_count()},
                         {"vertices", model.skin.rest.vertex_count()},
                         {"seed", seed},
                         {"config_hash", config_hash},
                         {"files", files}};
  write_text(root / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

DatasetInfo read_dataset_info(const fs::path& root) {
  if (!fs::exists(root / "manifest.json")) {
    throw std::runtime_error("no dataset at " + root.string() + " (manifest.json missing; run generate first)");
  }
  const json manifest = parse_file(root / "manifest.json");
  DatasetInfo info;
  info.root = root;
  info.frame_count = manifest.at("frames").get<int>();

  const json m = parse_file(root / "model.json");
  DeformationModel model;
  model.skin.rest = geometry::read_ply_mesh(root / "template.ply");
  model.skin.skeleton = deform::skeleton_from_json(m.at("skeleton"));
  model.skin.weights = deform::skin_weights_from_json(m.at("skin_weights"));
  model.graph = deform::graph_from_json(m.at("graph"));
  model.validate();
  info.model = std::make_shared<const DeformationModel>(std::move(model));

  for (const auto& c : parse_file(root / "cameras.json")) info.cameras.push_back(sensing::camera_from_json(c));
  return info;
}

FrameRecord read_frame(const DatasetInfo& info, int id) {
  if (id < 0 || id >= info.frame_count) throw std::out_of_range("frame " + std::to_string(id) + " not in dataset");
  const fs::path dir = info.root / frame_directory(id);
  FrameRecord f;
  f.id = id;
  f.mesh = geometry::read_ply_mesh(dir / "mesh.ply");
  f.dense = geometry::read_ply_cloud(dir / "dense.ply");
  f.sparse = geometry::read_ply_cloud(dir / "sparse.ply");
  const json pose = parse_file(dir / "pose.json");
  f.pose = deform::pose_from_json(pose.at("pose"));
  f.theta = deform::params_from_json(pose.at("theta"));
  return f;
}

std::vector<std::string> verify_dataset(const fs::path& root) {
  const json manifest = parse_file(root / "manifest.json");
  std::vector<std::string> bad;
  for (const auto& [name, crc] : manifest.at("files").items()) {
    if (!fs::exists(root / name) || hex32(file_crc32(root / name)) != crc.get<std::string>()) bad.push_back(name);
  }
  return bad;
}

}  // namespace nicp::bench
