#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nicp::geometry {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Face = std::array<int, 3>;

// Triangle mesh in meters. Normals and UVs are optional pass-through
// attributes; when present they hold one entry per vertex.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;

  bool empty() const { return faces.empty(); }
  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }

  // Throws std::invalid_argument on out-of-range or repeated face indices,
  // non-finite positions, or attribute arrays of the wrong length.
  void validate() const;

  Vec3 face_vertex(std::size_t face, int corner) const {
    return vertices[static_cast<std::size_t>(faces[face][static_cast<std::size_t>(corner)])];
  }
  double face_area(std::size_t face) const;
  double surface_area() const;
};

// Sensor samples in meters. camera_ids is either empty or parallel to points.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int> camera_ids;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_camera_ids() const { return !camera_ids.empty(); }

  void validate() const;
  void append(const PointCloud& other);
};

// Per-vertex normals by area-weighted face normal accumulation.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

}  // namespace nicp::geometry
