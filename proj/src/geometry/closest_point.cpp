#include "nicp/geometry/closest_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nicp/common/work_meter.hpp"

namespace nicp::geometry {
namespace {

constexpr int kLeafSize = 4;

ClosestPointResult make_result(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               double u, double v, double w) {
  ClosestPointResult r;
  r.barycentric = Vec3(u, v, w);
  r.point = u * a + v * b + w * c;
  r.squared_distance = (p - r.point).squaredNorm();
  return r;
}

// Closest point on segment a + s (b - a), s in [0, 1].
double segment_parameter(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return 0.0;
  return std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
}

// Zero-area triangles: best of the three edges.
ClosestPointResult degenerate_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                       const Vec3& c) {
  const double s_ab = segment_parameter(p, a, b);
  const double s_bc = segment_parameter(p, b, c);
  const double s_ca = segment_parameter(p, c, a);
  ClosestPointResult best = make_result(p, a, b, c, 1.0 - s_ab, s_ab, 0.0);
  const auto bc = make_result(p, a, b, c, 0.0, 1.0 - s_bc, s_bc);
  if (bc.squared_distance < best.squared_distance) best = bc;
  const auto ca = make_result(p, a, b, c, s_ca, 0.0, 1.0 - s_ca);
  if (ca.squared_distance < best.squared_distance) best = ca;
  return best;
}

}  // namespace

ClosestPointResult closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                             const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return make_result(p, a, b, c, 1.0, 0.0, 0.0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return make_result(p, a, b, c, 0.0, 1.0, 0.0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return make_result(p, a, b, c, 1.0 - v, v, 0.0);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return make_result(p, a, b, c, 0.0, 0.0, 1.0);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return make_result(p, a, b, c, 1.0 - w, 0.0, w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return make_result(p, a, b, c, 0.0, 1.0 - w, w);
  }

  const double sum = va + vb + vc;
  if (!(sum > 0.0)) return degenerate_triangle(p, a, b, c);
  return make_result(p, a, b, c, va / sum, vb / sum, vc / sum);
}

SpatialIndex::SpatialIndex(const TriMesh& mesh) : vertex_count_(mesh.vertices.size()) {
  corners_.reserve(mesh.faces.size());
  std::vector<Vec3> centroids;
  centroids.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    Corners t{mesh.face_vertex(f, 0), mesh.face_vertex(f, 1), mesh.face_vertex(f, 2)};
    centroids.push_back((t.a + t.b + t.c) / 3.0);
    corners_.push_back(t);
  }
  order_.resize(corners_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!corners_.empty()) {
    nodes_.reserve(2 * corners_.size() / kLeafSize + 2);
    build(0, static_cast<int>(corners_.size()), centroids);
    const double levels = std::ceil(std::log2(static_cast<double>(corners_.size()) / kLeafSize + 1.0));
    work::add(static_cast<double>(corners_.size()) * (levels + 1.0) * work::Cost::kBvhBuildEntry);
  }
}

int SpatialIndex::build(int begin, int end, const std::vector<Vec3>& centroids) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d cbox;
  for (int i = begin; i < end; ++i) {
    const auto& t = corners_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
    box.extend(t.a);
    box.extend(t.b);
    box.extend(t.c);
    cbox.extend(centroids[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
  }
  nodes_[static_cast<std::size_t>(id)].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[static_cast<std::size_t>(id)].begin = begin;
    nodes_[static_cast<std::size_t>(id)].end = end;
    return id;
  }
  int axis = 0;
  cbox.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int lhs, int rhs) {
                     const double l = centroids[static_cast<std::size_t>(lhs)][axis];
                     const double r = centroids[static_cast<std::size_t>(rhs)][axis];
                     return l < r || (l == r && lhs < rhs);
                   });
  const int left = build(begin, mid, centroids);
  const int right = build(mid, end, centroids);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

ClosestPointResult SpatialIndex::closest_point(const Vec3& p) const {
  if (nodes_.empty()) throw std::invalid_argument("SpatialIndex::closest_point: empty mesh");
  ClosestPointResult best;
  best.squared_distance = std::numeric_limits<double>::infinity();
  long visits = 0;
  long tests = 0;

  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    ++visits;
    if (node.box.squaredExteriorDistance(p) > best.squared_distance) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int f = order_[static_cast<std::size_t>(i)];
        const auto& t = corners_[static_cast<std::size_t>(f)];
        ++tests;
        ClosestPointResult r = closest_point_on_triangle(p, t.a, t.b, t.c);
        if (r.squared_distance < best.squared_distance ||
            (r.squared_distance == best.squared_distance && f < best.face)) {
          r.face = f;
          best = r;
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = l.box.squaredExteriorDistance(p);
    const double dr = r.box.squaredExteriorDistance(p);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  work::add(visits * work::Cost::kBvhNodeVisit + tests * work::Cost::kTriangleTest);
  return best;
}

namespace {

bool ray_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir,
             double t_max, double& t_near) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    double ta = (box.min()[k] - origin[k]) * inv_dir[k];
    double tb = (box.max()[k] - origin[k]) * inv_dir[k];
    if (std::isnan(ta) || std::isnan(tb)) {
      // Zero direction component with the origin on a slab plane.
      if (origin[k] < box.min()[k] || origin[k] > box.max()[k]) return false;
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  t_near = t0;
  return true;
}

}  // namespace

std::optional<RayHit> SpatialIndex::raycast(const Vec3& origin, const Vec3& direction,
                                            double t_min) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = direction.cwiseInverse();
  RayHit best;
  double best_t = std::numeric_limits<double>::infinity();
  long visits = 0;
  long tests = 0;

  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    ++visits;
    double t_near = 0.0;
    if (!ray_box(node.box, origin, inv_dir, best_t, t_near)) continue;
    if (node.left >= 0) {
      stack[top++] = node.right;
      stack[top++] = node.left;
      continue;
    }
    for (int i = node.begin; i < node.end; ++i) {
      const int f = order_[static_cast<std::size_t>(i)];
      const auto& tri = corners_[static_cast<std::size_t>(f)];
      ++tests;
      const Vec3 e1 = tri.b - tri.a;
      const Vec3 e2 = tri.c - tri.a;
      const Vec3 pvec = direction.cross(e2);
      const double det = e1.dot(pvec);
      if (det == 0.0) continue;
      const double inv_det = 1.0 / det;
      const Vec3 tvec = origin - tri.a;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < 0.0 || u > 1.0) continue;
      const Vec3 qvec = tvec.cross(e1);
      const double v = direction.dot(qvec) * inv_det;
      if (v < 0.0 || u + v > 1.0) continue;
      const double t = e2.dot(qvec) * inv_det;
      if (t <= t_min) continue;
      if (t < best_t || (t == best_t && f < best.face)) {
        best_t = t;
        best.face = f;
        best.t = t;
        best.barycentric = Vec3(1.0 - u - v, u, v);
      }
    }
  }
  work::add(visits * work::Cost::kBvhNodeVisit + tests * work::Cost::kRayTriangle);
  if (best.face < 0) return std::nullopt;
  return best;
}

namespace {

void check_index(const TriMesh& mesh, const SpatialIndex& index) {
  if (mesh.empty()) throw std::invalid_argument("closest_point: empty mesh");
  if (index.face_count() != mesh.faces.size() || index.vertex_count() != mesh.vertices.size()) {
    throw std::invalid_argument("closest_point: spatial index was built for a different mesh");
  }
}

}  // namespace

ClosestPointResult closest_point(const Vec3& p, const TriMesh& mesh, const SpatialIndex& index) {
  check_index(mesh, index);
  return index.closest_point(p);
}

std::vector<ClosestPointResult> closest_points(std::span<const Vec3> points, const TriMesh& mesh,
                                               const SpatialIndex& index) {
  check_index(mesh, index);
  std::vector<ClosestPointResult> out(points.size());
  const double before = work::units();
  double worker_units = 0.0;
  const long n = static_cast<long>(points.size());
#pragma omp parallel reduction(+ : worker_units)
  {
    const double start = work::units();
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = index.closest_point(points[static_cast<std::size_t>(i)]);
    worker_units += work::units() - start;
  }
  // Fold worker-thread costs into the calling thread's meter.
  work::g_units = before + worker_units;
  return out;
}

std::optional<ClosestPointResult> closest_point_projective(const Vec3& p, const TriMesh& mesh,
                                                           const PinholeCamera& camera,
                                                           const SpatialIndex& index) {
  check_index(mesh, index);
  const Vec3 origin = camera.center();
  const Vec3 direction = p - origin;
  if (direction.squaredNorm() == 0.0) return std::nullopt;
  const auto hit = index.raycast(origin, direction);
  if (!hit) return std::nullopt;
  const auto& face = mesh.faces[static_cast<std::size_t>(hit->face)];
  ClosestPointResult r;
  r.face = hit->face;
  r.barycentric = hit->barycentric;
  r.point = hit->barycentric[0] * mesh.vertices[static_cast<std::size_t>(face[0])] +
            hit->barycentric[1] * mesh.vertices[static_cast<std::size_t>(face[1])] +
            hit->barycentric[2] * mesh.vertices[static_cast<std::size_t>(face[2])];
  r.squared_distance = (r.point - p).squaredNorm();
  return r;
}

std::optional<ClosestPointResult> closest_point_projective(const Vec3& p, const TriMesh& mesh,
                                                           const PinholeCamera& camera) {
  if (mesh.empty()) throw std::invalid_argument("closest_point_projective: empty mesh");
  const SpatialIndex index(mesh);
  return closest_point_projective(p, mesh, camera, index);
}

}  // namespace nicp::geometry
