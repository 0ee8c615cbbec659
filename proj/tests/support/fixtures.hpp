#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "nicp/deform/model.hpp"
#include "nicp/geometry/mesh.hpp"
#include "nicp/sensing/garment.hpp"

namespace nicp::test {

using geometry::Face;
using geometry::TriMesh;
using geometry::Vec3;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

// Flat nx-by-ny vertex grid in the z = 0 plane spanning [0, size]^2.
inline TriMesh grid_mesh(int nx, int ny, double size = 1.0) {
  TriMesh m;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) m.vertices.emplace_back(size * i / (nx - 1), size * j / (ny - 1), 0.0);
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i;
      m.faces.push_back({a, a + 1, a + nx + 1});
      m.faces.push_back({a, a + nx + 1, a + nx});
    }
  }
  return m;
}

// A wrinkled grid: heights from a few random sinusoids.
inline TriMesh bumpy_mesh(int nx, int ny, std::mt19937_64& rng, double amplitude = 0.15) {
  TriMesh m = grid_mesh(nx, ny);
  const double fx = uniform(rng, 1.0, 4.0), fy = uniform(rng, 1.0, 4.0), ph = uniform(rng, 0.0, 6.0);
  for (auto& v : m.vertices) v.z() = amplitude * std::sin(fx * v.x() + ph) * std::cos(fy * v.y());
  return m;
}

// Independent triangles scattered in a cube.
inline TriMesh triangle_soup(int count, std::mt19937_64& rng) {
  TriMesh m;
  for (int f = 0; f < count; ++f) {
    const Vec3 c = random_vec(rng);
    for (int k = 0; k < 3; ++k) m.vertices.push_back(c + random_vec(rng, 0.3));
    m.faces.push_back({3 * f, 3 * f + 1, 3 * f + 2});
  }
  return m;
}

// Closest point on a triangle: in-plane projection when it falls inside,
// otherwise the nearest of the three clamped edge projections.
inline double point_triangle_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e0 = b - a, e1 = c - a;
  const double d00 = e0.dot(e0), d01 = e0.dot(e1), d11 = e1.dot(e1);
  const double r0 = (p - a).dot(e0), r1 = (p - a).dot(e1);
  const double det = d00 * d11 - d01 * d01;
  const double s = (d11 * r0 - d01 * r1) / det;
  const double t = (d00 * r1 - d01 * r0) / det;
  if (s >= 0.0 && t >= 0.0 && s + t <= 1.0) return (a + s * e0 + t * e1 - p).squaredNorm();
  auto segment = [&](const Vec3& u, const Vec3& v) {
    const double l = std::clamp((p - u).dot(v - u) / (v - u).squaredNorm(), 0.0, 1.0);
    return (u + l * (v - u) - p).squaredNorm();
  };
  return std::min({segment(a, b), segment(b, c), segment(c, a)});
}

struct BruteForceHit {
  int face = -1;
  double squared_distance = std::numeric_limits<double>::infinity();
};

inline BruteForceHit brute_force_closest(const Vec3& p, const TriMesh& mesh) {
  BruteForceHit best;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const double d = point_triangle_sq(p, mesh.face_vertex(f, 0), mesh.face_vertex(f, 1), mesh.face_vertex(f, 2));
    if (d < best.squared_distance) best = {static_cast<int>(f), d};
  }
  return best;
}

inline double brute_force_mean_sq(const std::vector<Vec3>& points, const TriMesh& mesh) {
  double s = 0.0;
  for (const auto& p : points) s += brute_force_closest(p, mesh).squared_distance;
  return s / static_cast<double>(points.size());
}

// Small garment with a coarse graph; fast enough for finite differences.
inline std::shared_ptr<deform::DeformationModel> small_model(int rings = 8, int segments = 12, int nodes = 12) {
  sensing::GarmentOptions o;
  o.rings = rings;
  o.segments = segments;
  auto model = std::make_shared<deform::DeformationModel>();
  model->skin = sensing::make_garment(o);
  model->graph = deform::build_graph(model->skin.rest, static_cast<std::size_t>(nodes));
  return model;
}

inline deform::GraphParams random_params(std::size_t nodes, std::mt19937_64& rng, double rot = 0.3,
                                         double trans = 0.05) {
  deform::GraphParams p(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    p.rotation(k) = random_vec(rng, rot);
    p.translation(k) = random_vec(rng, trans);
  }
  return p;
}

inline deform::BodyPose random_pose(std::size_t joints, std::mt19937_64& rng, double rot = 0.3) {
  deform::BodyPose pose = deform::BodyPose::identity(joints);
  for (auto& r : pose.rotations) r = random_vec(rng, rot);
  pose.root_translation = random_vec(rng, 0.2);
  return pose;
}

}  // namespace nicp::test
