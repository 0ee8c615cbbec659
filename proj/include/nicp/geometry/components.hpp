#pragma once

#include <vector>

#include "nicp/geometry/mesh.hpp"

namespace nicp::geometry {

// Component label per vertex under shared-vertex (face) adjacency. Labels are
// numbered in order of each component's lowest vertex index.
std::vector<int> connected_components(const TriMesh& mesh, int* component_count = nullptr);

// Drops every connected component with fewer than `min_vertices` vertices and
// compacts vertex indices, preserving the relative order of survivors.
TriMesh connected_component_filter(const TriMesh& mesh, int min_vertices);

}  // namespace nicp::geometry
