#pragma once

#include <vector>

#include "nicp/geometry/mesh.hpp"

namespace nicp::tracking {

inline constexpr int kDefaultSmoothingWindow = 5;

// Per-vertex moving average over a centered window of `window` frames.
// Frame indices outside the sequence are clamped to the first/last frame.
// Throws std::invalid_argument for an even or non-positive window or for
// meshes that do not share one topology.
std::vector<geometry::TriMesh> temporal_smooth(const std::vector<geometry::TriMesh>& meshes,
                                               int window = kDefaultSmoothingWindow);

}  // namespace nicp::tracking
