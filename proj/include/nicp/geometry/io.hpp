#pragma once

#include <filesystem>

#include "nicp/geometry/mesh.hpp"

namespace nicp::geometry {

// Wavefront OBJ: positions, optional vt/vn (kept only when indexed 1:1 with
// positions), polygon faces fan-triangulated.
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

// Binary little-endian PLY. Writers store positions as double so solver
// inputs round-trip exactly; readers accept float or double positions and
// any integer list type for faces.
TriMesh read_ply_mesh(const std::filesystem::path& path);
void write_ply_mesh(const std::filesystem::path& path, const TriMesh& mesh);

// Point clouds as vertex-only PLY with an optional int `camera_id` property.
PointCloud read_ply_cloud(const std::filesystem::path& path);
void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace nicp::geometry
