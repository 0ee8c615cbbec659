#pragma once

#include <cstdint>
#include <vector>

#include "nicp/geometry/closest_point.hpp"
#include "nicp/geometry/mesh.hpp"

namespace nicp::geometry {

inline constexpr int kDefaultMseSamples = 20000;

// Area-uniform surface samples; deterministic for a given seed.
// Throws std::invalid_argument for a mesh without positive area.
std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, std::uint64_t seed);

// Mean squared distance (m^2) from `points` to the indexed surface.
double mean_squared_distance(std::span<const Vec3> points, const TriMesh& mesh,
                             const SpatialIndex& index);

// Symmetric surface error in mm^2: the average of the two directional mean
// squared point-to-triangle distances, each over `samples_per_direction`
// area-uniform samples.
double two_way_mse(const TriMesh& predicted, const TriMesh& reference,
                   int samples_per_direction = kDefaultMseSamples, std::uint64_t seed = 0);

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
template <typename Rng>
double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace nicp::geometry
