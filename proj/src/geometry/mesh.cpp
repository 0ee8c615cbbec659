#include "nicp/geometry/mesh.hpp"

#include <stdexcept>
#include <string>

namespace nicp::geometry {

void TriMesh::validate() const {
  const auto n = static_cast<long long>(vertices.size());
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw std::invalid_argument("TriMesh: non-finite vertex position");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    for (int idx : face) {
      if (idx < 0 || idx >= n) {
        throw std::invalid_argument("TriMesh: face " + std::to_string(f) + " index " +
                                    std::to_string(idx) + " out of range");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw std::invalid_argument("TriMesh: face " + std::to_string(f) + " repeats a vertex");
    }
  }
  if (!normals.empty() && normals.size() != vertices.size()) {
    throw std::invalid_argument("TriMesh: normal count does not match vertex count");
  }
  if (!uvs.empty() && uvs.size() != vertices.size()) {
    throw std::invalid_argument("TriMesh: uv count does not match vertex count");
  }
}

double TriMesh::face_area(std::size_t face) const {
  const Vec3 a = face_vertex(face, 0);
  const Vec3 b = face_vertex(face, 1);
  const Vec3 c = face_vertex(face, 2);
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriMesh::surface_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) total += face_area(f);
  return total;
}

void PointCloud::validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("PointCloud: non-finite point");
  }
  if (!camera_ids.empty() && camera_ids.size() != points.size()) {
    throw std::invalid_argument("PointCloud: camera id count does not match point count");
  }
}

void PointCloud::append(const PointCloud& other) {
  if (!points.empty() && has_camera_ids() != other.has_camera_ids()) {
    throw std::invalid_argument("PointCloud::append: camera id presence mismatch");
  }
  points.insert(points.end(), other.points.begin(), other.points.end());
  camera_ids.insert(camera_ids.end(), other.camera_ids.begin(), other.camera_ids.end());
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 a = mesh.face_vertex(f, 0);
    const Vec3 b = mesh.face_vertex(f, 1);
    const Vec3 c = mesh.face_vertex(f, 2);
    const Vec3 n = (b - a).cross(c - a);
    for (int idx : mesh.faces[f]) normals[static_cast<std::size_t>(idx)] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }
  return normals;
}

}  // namespace nicp::geometry
