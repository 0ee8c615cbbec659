#include "nicp/nicp/smoothing.hpp"

#include <algorithm>
#include <stdexcept>

namespace nicp::tracking {

std::vector<geometry::TriMesh> temporal_smooth(const std::vector<geometry::TriMesh>& meshes, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("temporal_smooth: window must be odd and positive");
  if (meshes.empty()) return {};
  const std::size_t nv = meshes.front().vertices.size();
  for (const auto& m : meshes) {
    if (m.vertices.size() != nv || m.faces != meshes.front().faces) {
      throw std::invalid_argument("temporal_smooth: meshes do not share one topology");
    }
  }
  if (window == 1) return meshes;
  const int half = window / 2;
  const int last = static_cast<int>(meshes.size()) - 1;
  std::vector<geometry::TriMesh> out = meshes;
  for (int t = 0; t <= last; ++t) {
    auto& verts = out[t].vertices;
    for (std::size_t v = 0; v < nv; ++v) {
      geometry::Vec3 acc = geometry::Vec3::Zero();
      for (int k = -half; k <= half; ++k) acc += meshes[std::clamp(t + k, 0, last)].vertices[v];
      verts[v] = acc / static_cast<double>(window);
    }
    if (!out[t].normals.empty()) out[t].normals = geometry::vertex_normals(out[t]);
  }
  return out;
}

}  // namespace nicp::tracking
