#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/geometry/camera.hpp"
#include "nicp/geometry/mesh.hpp"

namespace nicp::sensing {

using geometry::PinholeCamera;
using geometry::PointCloud;
using geometry::TriMesh;
using geometry::Vec3;

// Per-pixel camera-frame depth in meters, row-major (index y * width + x);
// 0 marks pixels without a surface.
struct DepthMap {
  PinholeCamera camera;
  std::vector<double> depth;

  static DepthMap empty_for(const PinholeCamera& camera);

  int width() const { return camera.width; }
  int height() const { return camera.height; }
  double at(int x, int y) const { return depth[static_cast<std::size_t>(y) * camera.width + x]; }
  double& at(int x, int y) { return depth[static_cast<std::size_t>(y) * camera.width + x]; }
  std::size_t hit_count() const;
  void validate() const;
};

// Z-buffer rasterization with perspective-correct depth: each pixel (x, y)
// receives the nearest depth of the triangles covering that pixel position.
// Triangles with a vertex at or behind `near` are skipped.
DepthMap render_depth(const TriMesh& mesh, const PinholeCamera& camera, double near = 1e-3);

// Back-projection of every `stride`-th hit pixel in x and y into the root
// frame, tagged with the index of its map.
PointCloud fuse_point_cloud(std::span<const DepthMap> maps, int stride = 1);

// Offsets O[x, y] = R (d[x, y] - D[x, y]) K^-1 [x, y, 1]^T + t for pixels where
// both maps hit (`valid`); the translation term can be left out.
struct OffsetField {
  int width = 0;
  int height = 0;
  std::vector<Vec3> offsets;
  std::vector<char> valid;
};
OffsetField depth_offset(const DepthMap& sensor, const DepthMap& rendered, bool include_translation = true);

// Zero-mean Gaussian depth noise (truncated at 4 sigma) on every hit pixel,
// then independent dropout to 0 with probability `dropout`. Pixels whose
// noisy depth is not positive are dropped as well.
DepthMap add_depth_noise(const DepthMap& map, double sigma, double dropout, std::uint64_t seed);

nlohmann::json camera_json(const PinholeCamera& camera);
PinholeCamera camera_from_json(const nlohmann::json& j);

// Float32 raster plus a JSON sidecar (<path>.json) holding camera and size.
void write_depth(const std::filesystem::path& path, const DepthMap& map);
DepthMap read_depth(const std::filesystem::path& path);

}  // namespace nicp::sensing
