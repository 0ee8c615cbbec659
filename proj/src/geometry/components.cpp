#include "nicp/geometry/components.hpp"

#include <queue>

namespace nicp::geometry {

std::vector<int> connected_components(const TriMesh& mesh, int* component_count) {
  const std::size_t n = mesh.vertices.size();
  std::vector<std::vector<int>> adjacency(n);
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      adjacency[static_cast<std::size_t>(f[i])].push_back(f[(i + 1) % 3]);
      adjacency[static_cast<std::size_t>(f[(i + 1) % 3])].push_back(f[i]);
    }
  }

  std::vector<int> label(n, -1);
  int next = 0;
  std::queue<int> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0) continue;
    label[seed] = next;
    frontier.push(static_cast<int>(seed));
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop();
      for (int w : adjacency[static_cast<std::size_t>(v)]) {
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          frontier.push(w);
        }
      }
    }
    ++next;
  }
  if (component_count) *component_count = next;
  return label;
}

TriMesh connected_component_filter(const TriMesh& mesh, int min_vertices) {
  mesh.validate();
  int count = 0;
  const auto label = connected_components(mesh, &count);
  std::vector<int> size(static_cast<std::size_t>(count), 0);
  for (int l : label) ++size[static_cast<std::size_t>(l)];

  std::vector<int> remap(mesh.vertices.size(), -1);
  TriMesh out;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (size[static_cast<std::size_t>(label[v])] < min_vertices) continue;
    remap[v] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
    if (!mesh.normals.empty()) out.normals.push_back(mesh.normals[v]);
    if (!mesh.uvs.empty()) out.uvs.push_back(mesh.uvs[v]);
  }
  for (const auto& f : mesh.faces) {
    // All corners share one component, so checking the first suffices.
    if (remap[static_cast<std::size_t>(f[0])] < 0) continue;
    out.faces.push_back({remap[static_cast<std::size_t>(f[0])], remap[static_cast<std::size_t>(f[1])],
                         remap[static_cast<std::size_t>(f[2])]});
  }
  return out;
}

}  // namespace nicp::geometry
