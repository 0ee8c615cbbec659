#include <doctest.h>

#include <filesystem>
#include <functional>
#include <set>
#include <numeric>
#include <random>

#include "nicp/geometry/camera.hpp"
#include "nicp/geometry/closest_point.hpp"
#include "nicp/geometry/components.hpp"
#include "nicp/geometry/io.hpp"
#include "nicp/geometry/metrics.hpp"
#include "support/fixtures.hpp"

using namespace nicp;
using namespace nicp::geometry;
using test::random_vec;

TEST_CASE("point-triangle distance agrees with the projection oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 a = random_vec(rng), b = random_vec(rng), c = random_vec(rng);
    const Vec3 p = random_vec(rng, 2.0);
    const auto hit = closest_point_on_triangle(p, a, b, c);
    const double oracle = test::point_triangle_sq(p, a, b, c);
    CHECK(hit.squared_distance == doctest::Approx(oracle).epsilon(1e-10));
    CHECK((hit.barycentric[0] * a + hit.barycentric[1] * b + hit.barycentric[2] * c - hit.point).norm() < 1e-12);
    CHECK(hit.barycentric.minCoeff() >= 0.0);
    CHECK(hit.barycentric.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("vertex and edge regions") {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  auto h = closest_point_on_triangle(Vec3(-1, -1, 0.5), a, b, c);
  CHECK(h.barycentric == Vec3(1, 0, 0));
  h = closest_point_on_triangle(Vec3(0.5, -2, 0), a, b, c);
  CHECK(h.point.isApprox(Vec3(0.5, 0, 0)));
  CHECK(h.squared_distance == doctest::Approx(4.0));
  h = closest_point_on_triangle(Vec3(0.2, 0.2, 3), a, b, c);
  CHECK(h.squared_distance == doctest::Approx(9.0));
}

TEST_CASE("BVH closest point matches brute force on small meshes") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const TriMesh mesh = trial % 2 ? test::triangle_soup(150, rng) : test::bumpy_mesh(10, 8, rng);
    REQUIRE(mesh.face_count() <= 200);
    const SpatialIndex index(mesh);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p = random_vec(rng, 1.5);
      const auto hit = closest_point(p, mesh, index);
      const auto oracle = test::brute_force_closest(p, mesh);
      CHECK(hit.squared_distance == doctest::Approx(oracle.squared_distance).epsilon(1e-12).scale(1e-12));
      // Same face unless another face is equally close (shared edge or vertex).
      if (hit.face != oracle.face) {
        const double other = test::point_triangle_sq(p, mesh.face_vertex(oracle.face, 0),
                                                     mesh.face_vertex(oracle.face, 1), mesh.face_vertex(oracle.face, 2));
        const double mine = test::point_triangle_sq(p, mesh.face_vertex(hit.face, 0), mesh.face_vertex(hit.face, 1),
                                                    mesh.face_vertex(hit.face, 2));
        CHECK(std::abs(mine - other) <= 1e-12 * std::max(1.0, other));
      }
    }
  }
}

TEST_CASE("ties on a shared vertex resolve to the lowest face id") {
  const TriMesh grid = test::grid_mesh(3, 3);
  const SpatialIndex index(grid);
  // Vertex 4 is the grid center, shared by six faces; the query sits above it.
  const auto hit = closest_point(Vec3(0.5, 0.5, 1.0), grid, index);
  int lowest = -1;
  for (std::size_t f = 0; f < grid.faces.size(); ++f) {
    const auto& face = grid.faces[f];
    if (face[0] == 4 || face[1] == 4 || face[2] == 4) {
      lowest = static_cast<int>(f);
      break;
    }
  }
  CHECK(hit.face == lowest);
  CHECK(hit.squared_distance == 1.0);
}

TEST_CASE("batch queries equal single queries") {
  std::mt19937_64 rng(5);
  const TriMesh mesh = test::bumpy_mesh(12, 12, rng);
  const SpatialIndex index(mesh);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(random_vec(rng));
  const auto batch = closest_points(pts, mesh, index);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto one = closest_point(pts[i], mesh, index);
    CHECK(batch[i].face == one.face);
    CHECK(batch[i].point == one.point);
  }
}

TEST_CASE("an index built for another mesh is rejected") {
  const TriMesh a = test::grid_mesh(3, 3), b = test::grid_mesh(4, 4);
  const SpatialIndex index(a);
  CHECK_THROWS_AS(closest_point(Vec3::Zero(), b, index), std::invalid_argument);
  CHECK_THROWS_AS(closest_point(Vec3::Zero(), TriMesh{}, index), std::invalid_argument);
}

namespace {

// Moller-Trumbore over every face, keeping the nearest positive hit.
double brute_force_ray(const Vec3& o, const Vec3& d, const TriMesh& mesh, int* face) {
  double best = std::numeric_limits<double>::infinity();
  *face = -1;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 a = mesh.face_vertex(f, 0), e1 = mesh.face_vertex(f, 1) - a, e2 = mesh.face_vertex(f, 2) - a;
    const Vec3 pv = d.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 tv = o - a;
    const double u = tv.dot(pv) / det;
    const Vec3 qv = tv.cross(e1);
    const double v = d.dot(qv) / det;
    const double t = e2.dot(qv) / det;
    if (u < 0 || v < 0 || u + v > 1 || t <= 1e-12) continue;
    if (t < best) {
      best = t;
      *face = static_cast<int>(f);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("raycast matches brute-force intersection") {
  std::mt19937_64 rng(8);
  const TriMesh mesh = test::triangle_soup(120, rng);
  const SpatialIndex index(mesh);
  int hits = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec3 o = random_vec(rng, 2.0);
    const Vec3 d = random_vec(rng).normalized();
    int face = -1;
    const double t = brute_force_ray(o, d, mesh, &face);
    const auto hit = index.raycast(o, d);
    if (face < 0) {
      CHECK_FALSE(hit.has_value());
      continue;
    }
    ++hits;
    REQUIRE(hit.has_value());
    CHECK(hit->t == doctest::Approx(t).epsilon(1e-9));
  }
  CHECK(hits > 20);
}

TEST_CASE("projective correspondence of a surface point is the point itself") {
  std::mt19937_64 rng(9);
  const TriMesh mesh = test::bumpy_mesh(15, 15, rng, 0.05);
  const auto cam = PinholeCamera::look_at(Vec3(0.5, 0.5, 2.0), Vec3(0.5, 0.5, 0.0), Vec3(0, 1, 0), 300, 256, 256);
  const SpatialIndex index(mesh);
  for (int i = 0; i < 50; ++i) {
    const std::size_t f = std::uniform_int_distribution<std::size_t>(0, mesh.faces.size() - 1)(rng);
    const Vec3 p = (mesh.face_vertex(f, 0) + mesh.face_vertex(f, 1) + mesh.face_vertex(f, 2)) / 3.0;
    const auto hit = closest_point_projective(p, mesh, cam, index);
    REQUIRE(hit.has_value());
    CHECK((hit->point - p).norm() < 1e-9);
  }
  CHECK_FALSE(closest_point_projective(Vec3(5, 5, 0), mesh, cam, index).has_value());
}

namespace {

int union_find_components(const TriMesh& mesh, std::vector<int>& root_of) {
  std::vector<int> parent(mesh.vertex_count());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& f : mesh.faces) {
    parent[find(f[1])] = find(f[0]);
    parent[find(f[2])] = find(f[0]);
  }
  root_of.resize(parent.size());
  std::set<int> roots;
  for (std::size_t v = 0; v < parent.size(); ++v) roots.insert(root_of[v] = find(static_cast<int>(v)));
  return static_cast<int>(roots.size());
}

TriMesh random_pieces(std::mt19937_64& rng) {
  TriMesh mesh;
  const int pieces = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int p = 0; p < pieces; ++p) {
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    TriMesh g = test::grid_mesh(n, 2);
    const int base = static_cast<int>(mesh.vertices.size());
    for (auto& v : g.vertices) mesh.vertices.push_back(v + Vec3(0, 0, p));
    for (auto f : g.faces) mesh.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  // Shuffle vertex ids so components interleave.
  std::vector<int> perm(mesh.vertices.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TriMesh out;
  out.vertices.resize(mesh.vertices.size());
  for (std::size_t v = 0; v < perm.size(); ++v) out.vertices[perm[v]] = mesh.vertices[v];
  for (auto f : mesh.faces) out.faces.push_back({perm[f[0]], perm[f[1]], perm[f[2]]});
  return out;
}

}  // namespace

TEST_CASE("connected components agree with union-find") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const TriMesh mesh = random_pieces(rng);
    std::vector<int> roots;
    const int expected = union_find_components(mesh, roots);
    int count = 0;
    const auto labels = connected_components(mesh, &count);
    CHECK(count == expected);
    for (std::size_t a = 0; a < labels.size(); ++a) {
      for (std::size_t b = a + 1; b < labels.size(); ++b) CHECK((labels[a] == labels[b]) == (roots[a] == roots[b]));
    }
    CHECK(labels[0] == 0);
  }
}

TEST_CASE("component filter is idempotent and keeps only large pieces") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const TriMesh mesh = random_pieces(rng);
    const TriMesh once = connected_component_filter(mesh, 7);
    const TriMesh twice = connected_component_filter(once, 7);
    CHECK(once.vertices == twice.vertices);
    CHECK(once.faces == twice.faces);
    int count = 0;
    const auto labels = connected_components(once, &count);
    std::vector<int> sizes(static_cast<std::size_t>(count), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (int s : sizes) CHECK(s >= 7);
    CHECK_NOTHROW(once.validate());
  }
}

TEST_CASE("two-way MSE of parallel planes is the squared offset") {
  const TriMesh a = test::grid_mesh(6, 6, 1.0);
  TriMesh b = a;
  for (auto& v : b.vertices) v.z() += 0.003;
  // Every sample projects inside the opposite plane, so each distance is 3 mm.
  CHECK(two_way_mse(a, b, 2000, 1) == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(two_way_mse(a, a, 2000, 1) < 1e-20);
}

TEST_CASE("two-way MSE agrees with a brute-force Monte Carlo estimate") {
  std::mt19937_64 rng(4);
  const TriMesh a = test::bumpy_mesh(10, 10, rng, 0.1);
  const TriMesh b = test::bumpy_mesh(10, 10, rng, 0.1);
  const double fast = two_way_mse(a, b, 20000, 7);
  const double oracle =
      0.5e6 * (test::brute_force_mean_sq(sample_surface(a, 4000, 99), b) +
               test::brute_force_mean_sq(sample_surface(b, 4000, 98), a));
  CHECK(fast == doctest::Approx(oracle).epsilon(0.05));
}

TEST_CASE("surface sampling is area-uniform and seeded") {
  const TriMesh grid = test::grid_mesh(5, 5, 2.0);
  const auto s1 = sample_surface(grid, 20000, 3);
  const auto s2 = sample_surface(grid, 20000, 3);
  CHECK(s1 == s2);
  int left = 0;
  for (const auto& p : s1) left += p.x() < 1.0;
  CHECK(std::abs(left - 10000) < 4 * 71);  // binomial, 4 standard deviations
  CHECK_THROWS_AS(sample_surface(TriMesh{}, 10, 0), std::invalid_argument);
}

TEST_CASE("mesh validation and area") {
  TriMesh grid = test::grid_mesh(3, 3, 2.0);
  CHECK(grid.surface_area() == doctest::Approx(4.0));
  CHECK_NOTHROW(grid.validate());
  grid.faces.push_back({0, 0, 1});
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
  grid.faces.back() = {0, 1, 99};
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}

TEST_CASE("PLY and OBJ round trips") {
  std::mt19937_64 rng(6);
  TriMesh mesh = test::bumpy_mesh(7, 5, rng);
  const auto dir = std::filesystem::temp_directory_path() / "nicp_geometry_io";
  std::filesystem::create_directories(dir);
  write_ply_mesh(dir / "m.ply", mesh);
  const TriMesh back = read_ply_mesh(dir / "m.ply");
  CHECK(back.vertices == mesh.vertices);
  CHECK(back.faces == mesh.faces);

  write_obj(dir / "m.obj", mesh);
  const TriMesh obj = read_obj(dir / "m.obj");
  CHECK(obj.faces == mesh.faces);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) CHECK((obj.vertices[v] - mesh.vertices[v]).norm() < 1e-9);

  PointCloud cloud;
  for (int i = 0; i < 30; ++i) {
    cloud.points.push_back(random_vec(rng));
    cloud.camera_ids.push_back(i % 3);
  }
  write_ply_cloud(dir / "c.ply", cloud);
  const PointCloud cb = read_ply_cloud(dir / "c.ply");
  CHECK(cb.points == cloud.points);
  CHECK(cb.camera_ids == cloud.camera_ids);
  CHECK_THROWS(read_ply_mesh(dir / "missing.ply"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("camera projection round trip") {
  const auto cam = PinholeCamera::look_at(Vec3(2, 1, 0.5), Vec3(0, 0.7, 0), Vec3(0, 1, 0), 330, 256, 256);
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_vec(rng, 0.3) + Vec3(0, 0.7, 0);
    const Vec3 q = cam.project(p);
    CHECK(q.z() > 0);
    CHECK((cam.unproject(q.x(), q.y(), q.z()) - p).norm() < 1e-12);
  }
  const Vec3 center = cam.project(Vec3(0, 0.7, 0));
  CHECK(center.x() == doctest::Approx(127.5).epsilon(1e-9));
  CHECK(center.y() == doctest::Approx(127.5).epsilon(1e-9));
}
