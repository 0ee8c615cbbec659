#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "nicp/geometry/camera.hpp"
#include "nicp/geometry/mesh.hpp"

namespace nicp::geometry {

struct ClosestPointResult {
  Vec3 point = Vec3::Zero();
  int face = -1;
  // Weights of the face's three corners; point = sum_i barycentric[i] * corner_i.
  Vec3 barycentric = Vec3::Zero();
  double squared_distance = 0.0;
};

// Closest point on triangle (a, b, c) to p by Voronoi-region classification.
// Vertex and edge regions are tested in corner order a, b, c, so ties resolve
// to the lowest barycentric corner.
ClosestPointResult closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                             const Vec3& c);

struct RayHit {
  int face = -1;
  double t = 0.0;  // hit = origin + t * direction
  Vec3 barycentric = Vec3::Zero();
};

// Bounding-volume hierarchy over the triangles of one mesh. Holds a copy of
// the triangle corners, so it stays valid independently of the mesh object.
class SpatialIndex {
 public:
  explicit SpatialIndex(const TriMesh& mesh);

  std::size_t face_count() const { return corners_.size(); }
  std::size_t vertex_count() const { return vertex_count_; }

  // Globally nearest surface point; ties go to the lowest face id.
  ClosestPointResult closest_point(const Vec3& p) const;
  // Front-most intersection with t > t_min; ties go to the lowest face id.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& direction,
                                double t_min = 1e-12) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;   // child index, or -1 for a leaf
    int right = -1;
    int begin = 0;   // leaf range into order_
    int end = 0;
  };
  struct Corners {
    Vec3 a, b, c;
  };

  int build(int begin, int end, const std::vector<Vec3>& centroids);

  std::vector<Corners> corners_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  std::size_t vertex_count_ = 0;
};

// Euclidean correspondence. Throws std::invalid_argument for an empty mesh or
// an index that was not built for this mesh.
ClosestPointResult closest_point(const Vec3& p, const TriMesh& mesh, const SpatialIndex& index);

// Batch form; evaluated in parallel, bit-identical to sequential evaluation.
std::vector<ClosestPointResult> closest_points(std::span<const Vec3> points, const TriMesh& mesh,
                                               const SpatialIndex& index);

// Projective correspondence: the front-most mesh point on the camera ray
// through p. std::nullopt when the ray misses the mesh.
std::optional<ClosestPointResult> closest_point_projective(const Vec3& p, const TriMesh& mesh,
                                                           const PinholeCamera& camera,
                                                           const SpatialIndex& index);
std::optional<ClosestPointResult> closest_point_projective(const Vec3& p, const TriMesh& mesh,
                                                           const PinholeCamera& camera);

}  // namespace nicp::geometry
