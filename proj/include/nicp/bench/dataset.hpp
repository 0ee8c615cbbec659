#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/bench/config.hpp"
#include "nicp/deform/model.hpp"
#include "nicp/nicp/train.hpp"
#include "nicp/sensing/sequence.hpp"

namespace nicp::bench {

using deform::DeformationModel;
using geometry::PinholeCamera;

// On-disk layout:
//   model.json, template.ply, cameras.json, manifest.json,
//   frame_%05d/{mesh.ply, dense.ply, sparse.ply, pose.json}
struct FrameRecord {
  int id = 0;
  geometry::TriMesh mesh;  // ground truth D(theta*)
  geometry::PointCloud dense;
  geometry::PointCloud sparse;
  deform::BodyPose pose;
  deform::GraphParams theta;

  tracking::TrainingFrame training() const { return {id, sparse, dense, pose}; }
};

struct DatasetInfo {
  std::filesystem::path root;
  std::shared_ptr<const DeformationModel> model;
  std::vector<PinholeCamera> cameras;
  int frame_count = 0;
};

// Indices of the training frames and the held-out tail.
struct Split {
  std::vector<int> train;
  std::vector<int> heldout;
};
Split split_frames(int frame_count, double heldout_fraction);

DeformationModel build_model(const ExperimentConfig& config);

std::string frame_directory(int id);

// Writes the dataset into `root` (created if needed) and returns the manifest.
nlohmann::json write_dataset(const std::filesystem::path& root, const DeformationModel& model,
                             const sensing::SyntheticSequence& sequence, const std::string& config_hash,
                             std::uint64_t seed);

// Throws std::runtime_error when the manifest or a referenced file is missing.
DatasetInfo read_dataset_info(const std::filesystem::path& root);
FrameRecord read_frame(const DatasetInfo& info, int id);

// Recomputes every file checksum listed in the manifest; returns the names
// of mismatching or missing files.
std::vector<std::string> verify_dataset(const std::filesystem::path& root);

std::uint32_t file_crc32(const std::filesystem::path& path);
std::string hex32(std::uint32_t value);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace nicp::bench
