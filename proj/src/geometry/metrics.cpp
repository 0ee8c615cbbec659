#include "nicp/geometry/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace nicp::geometry {

std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_surface: count must be >= 1");
  std::vector<double> cdf(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cdf[f] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero area");

  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double target = unit_uniform(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.end()) --it;
    const auto f = static_cast<std::size_t>(it - cdf.begin());
    const double r1 = std::sqrt(unit_uniform(rng));
    const double r2 = unit_uniform(rng);
    const double u = 1.0 - r1;
    const double v = r1 * (1.0 - r2);
    const double w = r1 * r2;
    out.push_back(u * mesh.face_vertex(f, 0) + v * mesh.face_vertex(f, 1) +
                  w * mesh.face_vertex(f, 2));
  }
  return out;
}

double mean_squared_distance(std::span<const Vec3> points, const TriMesh& mesh,
                             const SpatialIndex& index) {
  if (points.empty()) throw std::invalid_argument("mean_squared_distance: no points");
  const auto hits = closest_points(points, mesh, index);
  double sum = 0.0;
  for (const auto& h : hits) sum += h.squared_distance;
  return sum / static_cast<double>(hits.size());
}

double two_way_mse(const TriMesh& predicted, const TriMesh& reference, int samples_per_direction,
                   std::uint64_t seed) {
  if (predicted.empty() || reference.empty()) {
    throw std::invalid_argument("two_way_mse: empty mesh");
  }
  if (samples_per_direction < 1) {
    throw std::invalid_argument("two_way_mse: samples_per_direction must be >= 1");
  }
  const auto from_pred = sample_surface(predicted, samples_per_direction, seed);
  const auto from_ref = sample_surface(reference, samples_per_direction, seed + 1);
  const SpatialIndex pred_index(predicted);
  const SpatialIndex ref_index(reference);
  const double forward = mean_squared_distance(from_pred, reference, ref_index);
  const double backward = mean_squared_distance(from_ref, predicted, pred_index);
  return 0.5 * (forward + backward) * 1e6;
}

}  // namespace nicp::geometry
