#include <doctest.h>

#include <random>

#include "nicp/deform/rotation.hpp"
#include "nicp/geometry/metrics.hpp"
#include "nicp/nicp/canonical.hpp"
#include "nicp/nicp/smoothing.hpp"
#include "nicp/nicp/track.hpp"
#include "nicp/nicp/train.hpp"
#include "support/fixtures.hpp"

using namespace nicp;
using namespace nicp::tracking;
using nicp::test::random_pose;
using nicp::test::random_vec;
using nicp::test::small_model;

namespace {

neural::NetworkSpec tiny_spec(std::size_t nodes, float last_init = 1e-6f) {
  neural::NetworkSpec s;
  s.stages = {{16, 0.3f, {8, 8}}, {4, 0.8f, {16}}};
  s.head = {24, static_cast<int>(6 * nodes)};
  s.gradient_channels = static_cast<int>(6 * nodes);
  s.last_layer_init = last_init;
  return s;
}

PointCloud cloud_of(const std::vector<Vec3>& pts) {
  PointCloud c;
  c.points = pts;
  return c;
}

// Dense and sparse observations of the template deformed by `truth`.
TrainingFrame solvable_frame(const std::shared_ptr<deform::DeformationModel>& model, const deform::GraphParams& truth,
                             const BodyPose& pose, int id = 0) {
  const TriMesh target = deform::deform_full(model->skin, model->graph, truth, pose);
  TrainingFrame f;
  f.id = id;
  f.pose = pose;
  f.dense = cloud_of(geometry::sample_surface(target, 300, 11));
  f.sparse = cloud_of(geometry::sample_surface(target, 120, 12));
  return f;
}

// Root pose whose root transform is A * root_transform(pose).
BodyPose moved_pose(const Skeleton& skeleton, const BodyPose& pose, const Rigid& a) {
  const Rigid g = deform::root_transform(skeleton, pose);
  BodyPose out = pose;
  out.rotations[0] = deform::axis_angle_from_matrix(a.linear() * g.linear());
  out.root_translation.setZero();
  const Rigid g0 = deform::root_transform(skeleton, out);
  out.root_translation = (a * g).translation() - g0.translation();
  return out;
}

}  // namespace

TEST_CASE("canonicalize and to_world are inverse") {
  auto model = small_model();
  std::mt19937_64 rng(3);
  const auto& skel = model->skin.skeleton;
  for (int trial = 0; trial < 10; ++trial) {
    const BodyPose pose = random_pose(skel.size(), rng, 0.8);
    PointCloud c;
    for (int i = 0; i < 50; ++i) c.points.push_back(random_vec(rng));
    const PointCloud back = to_world(canonicalize(c, skel, pose), skel, pose);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK((back.points[i] - c.points[i]).norm() < 1e-12);
  }
}

TEST_CASE("pure root translation shifts canonical points by minus the translation") {
  auto model = small_model();
  const auto& skel = model->skin.skeleton;
  BodyPose pose = BodyPose::identity(skel.size());
  pose.root_translation = Vec3(0.3, -0.2, 1.5);
  const PointCloud c = cloud_of({Vec3(0, 0, 0), Vec3(1, 2, 3), Vec3(-0.5, 0.25, 4)});
  const PointCloud k = canonicalize(c, skel, pose);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((k.points[i] - (c.points[i] - pose.root_translation)).norm() < 1e-14);
  }
}

TEST_CASE("subsample is a seeded ordered subset") {
  PointCloud c;
  for (int i = 0; i < 1000; ++i) {
    c.points.push_back(Vec3(i, 0, 0));
    c.camera_ids.push_back(i % 3);
  }
  const auto a = subsample(c, 100, 7);
  const auto b = subsample(c, 100, 7);
  const auto d = subsample(c, 100, 8);
  REQUIRE(a.size() == 100);
  CHECK(a.points == b.points);
  CHECK(a.points != d.points);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.points[i].x() > a.points[i - 1].x());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.camera_ids[i] == static_cast<int>(a.points[i].x()) % 3);
  CHECK(subsample(c, 5000, 1).points == c.points);
  CHECK_THROWS_AS(subsample(c, 0, 1), std::invalid_argument);
}

TEST_CASE("untrained tracker returns the skinned template") {
  auto model = small_model();
  std::mt19937_64 rng(5);
  const BodyPose pose = random_pose(model->skin.skeleton.size(), rng);
  const neural::UpdateNetwork net(tiny_spec(model->graph.node_count()), 1);
  const TriMesh skinned = deform::lbs(model->skin, pose);
  const auto frame = solvable_frame(model, test::random_params(model->graph.node_count(), rng, 0.2, 0.03), pose);
  const auto result = track(net, frame.sparse, pose, model, NicpConfig{});
  REQUIRE(result.mesh.vertices.size() == skinned.vertices.size());
  double worst = 0.0;
  for (std::size_t v = 0; v < skinned.vertices.size(); ++v) {
    worst = std::max(worst, (result.mesh.vertices[v] - skinned.vertices[v]).norm());
  }
  CHECK(worst < 1e-3);
  CHECK(result.trace.records.size() == 4);
}

TEST_CASE("tracking is equivariant to a rigid motion of the whole scene") {
  auto model = small_model();
  std::mt19937_64 rng(9);
  const auto& skel = model->skin.skeleton;
  const BodyPose pose = random_pose(skel.size(), rng);
  const neural::UpdateNetwork net(tiny_spec(model->graph.node_count(), 0.3f), 2);
  const auto frame = solvable_frame(model, test::random_params(model->graph.node_count(), rng, 0.2, 0.03), pose);

  Rigid a = Rigid::Identity();
  a.linear() = deform::rotation_matrix(Vec3(0.4, -1.1, 0.7));
  a.translation() = Vec3(0.5, 1.0, -2.0);
  const BodyPose moved = moved_pose(skel, pose, a);
  const PointCloud moved_cloud = cloud_of(transform_points(a, frame.sparse.points));

  const auto r1 = track(net, frame.sparse, pose, model, NicpConfig{});
  const auto r2 = track(net, moved_cloud, moved, model, NicpConfig{});
  CHECK((r1.theta.vector() - r2.theta.vector()).cwiseAbs().maxCoeff() < 1e-9);
  const auto expected = transform_points(a, r1.mesh.vertices);
  double worst = 0.0;
  for (std::size_t v = 0; v < expected.size(); ++v) {
    worst = std::max(worst, (expected[v] - r2.mesh.vertices[v]).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("tracking does not depend on call order") {
  auto model = small_model();
  std::mt19937_64 rng(13);
  const auto nodes = model->graph.node_count();
  const neural::UpdateNetwork net(tiny_spec(nodes, 0.3f), 4);
  const BodyPose p1 = random_pose(model->skin.skeleton.size(), rng);
  const BodyPose p2 = random_pose(model->skin.skeleton.size(), rng);
  const auto f1 = solvable_frame(model, test::random_params(nodes, rng, 0.2, 0.03), p1, 1);
  const auto f2 = solvable_frame(model, test::random_params(nodes, rng, 0.2, 0.03), p2, 2);
  const auto a1 = track(net, f1.sparse, p1, model, NicpConfig{});
  const auto a2 = track(net, f2.sparse, p2, model, NicpConfig{});
  const auto b2 = track(net, f2.sparse, p2, model, NicpConfig{});
  const auto b1 = track(net, f1.sparse, p1, model, NicpConfig{});
  CHECK(a1.theta.vector() == b1.theta.vector());
  CHECK(a2.theta.vector() == b2.theta.vector());
}

TEST_CASE("track rejects a network of the wrong output size") {
  auto model = small_model();
  const neural::UpdateNetwork net(tiny_spec(model->graph.node_count() + 1), 1);
  const PointCloud c = cloud_of({Vec3(0, 0, 0)});
  CHECK_THROWS_AS(track(net, c, BodyPose::identity(model->skin.skeleton.size()), model, NicpConfig{}),
                  std::invalid_argument);
}

TEST_CASE("temporal smoothing") {
  std::mt19937_64 rng(17);
  const TriMesh base = test::grid_mesh(3, 3);
  std::vector<TriMesh> seq;
  for (int f = 0; f < 7; ++f) {
    TriMesh m = base;
    for (auto& v : m.vertices) v += random_vec(rng, 0.1);
    seq.push_back(m);
  }

  SUBCASE("window one is the identity") {
    const auto out = temporal_smooth(seq, 1);
    for (std::size_t f = 0; f < seq.size(); ++f) CHECK(out[f].vertices == seq[f].vertices);
  }
  SUBCASE("constant sequences are fixed points") {
    const std::vector<TriMesh> constant(5, seq[0]);
    for (const auto& m : temporal_smooth(constant, 5)) {
      for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        CHECK((m.vertices[v] - seq[0].vertices[v]).norm() < 1e-15);
      }
    }
  }
  SUBCASE("linear motion is preserved away from the ends") {
    std::vector<TriMesh> linear;
    const Vec3 step(0.01, -0.02, 0.005);
    for (int f = 0; f < 9; ++f) {
      TriMesh m = seq[0];
      for (auto& v : m.vertices) v += static_cast<double>(f) * step;
      linear.push_back(m);
    }
    const auto out = temporal_smooth(linear, 5);
    for (int f = 2; f < 7; ++f) {
      for (std::size_t v = 0; v < out[f].vertices.size(); ++v) {
        CHECK((out[f].vertices[v] - linear[f].vertices[v]).norm() < 1e-14);
      }
    }
    // Clamped at the start: frames {0,0,0,1,2}.
    const Vec3 expect = seq[0].vertices[0] + 0.6 * step;
    CHECK((out[0].vertices[0] - expect).norm() < 1e-14);
  }
  SUBCASE("a three frame window is the mean of neighbors") {
    const auto out = temporal_smooth(seq, 3);
    const Vec3 expect = (seq[2].vertices[4] + seq[3].vertices[4] + seq[4].vertices[4]) / 3.0;
    CHECK((out[3].vertices[4] - expect).norm() < 1e-15);
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(temporal_smooth(seq, 4), std::invalid_argument);
    CHECK_THROWS_AS(temporal_smooth(seq, 0), std::invalid_argument);
    auto broken = seq;
    broken[2].vertices.pop_back();
    CHECK_THROWS_AS(temporal_smooth(broken, 3), std::invalid_argument);
  }
}

TEST_CASE("unrolled loss with a zero network is the data term at the template") {
  auto model = small_model();
  std::mt19937_64 rng(21);
  const BodyPose pose = random_pose(model->skin.skeleton.size(), rng);
  neural::UpdateNetwork net(tiny_spec(model->graph.node_count()), 1);
  net.parameters().setZero();
  const auto frame = solvable_frame(model, test::random_params(model->graph.node_count(), rng, 0.3, 0.04), pose);
  NicpConfig cfg;
  cfg.iterations = 3;
  const auto loss = unrolled_loss(net, frame, model, cfg, 100000, 3);
  const double expected = test::brute_force_mean_sq(frame.dense.points, deform::lbs(model->skin, pose));
  REQUIRE(loss.iteration_loss.size() == 3);
  for (double li : loss.iteration_loss) CHECK(li == doctest::Approx(expected).epsilon(1e-9));
  CHECK(loss.loss == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("unrolled loss gradient matches finite differences") {
  auto model = small_model(6, 8, 6);
  std::mt19937_64 rng(25);
  const auto nodes = model->graph.node_count();
  const BodyPose pose = random_pose(model->skin.skeleton.size(), rng, 0.2);
  const auto frame = solvable_frame(model, test::random_params(nodes, rng, 0.3, 0.04), pose);

  // With r and g disabled the network inputs do not move with theta, so the
  // frozen gradient is the full derivative for any N.
  for (int n_iter : {1, 3}) {
    auto spec = tiny_spec(nodes, 0.01f);
    if (n_iter > 1) spec.use_residual = spec.use_gradient = false;
    neural::UpdateNetwork net(spec, 6);
    NicpConfig cfg;
    cfg.iterations = n_iter;
    cfg.reg_weight = 1e-2;
    const auto base = unrolled_loss(net, frame, model, cfg, 100000, 1);
    const auto grad = loss_gradient(net, base);
    REQUIRE(grad.size() == static_cast<Eigen::Index>(net.parameter_count()));

    std::normal_distribution<float> gauss(0.0f, 1.0f);
    int good = 0;
    const int trials = 6;
    for (int t = 0; t < trials; ++t) {
      neural::VectorXf dir(grad.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = gauss(rng);
      dir /= dir.norm();
      const float h = 5e-4f;
      neural::UpdateNetwork plus = net, minus = net;
      plus.parameters() += h * dir;
      minus.parameters() -= h * dir;
      const double fd = (unrolled_loss(plus, frame, model, cfg, 100000, 1, false).loss -
                         unrolled_loss(minus, frame, model, cfg, 100000, 1, false).loss) /
                        (2.0 * h);
      const double an = grad.cast<double>().dot(dir.cast<double>());
      if (std::abs(fd - an) <= 1e-2 * std::max(std::abs(an), 1e-6)) ++good;
    }
    CHECK(good >= trials - 1);
  }
}

TEST_CASE("training fits a single solvable frame") {
  auto model = small_model(6, 8, 6);
  const auto nodes = model->graph.node_count();
  deform::GraphParams truth(nodes);
  for (std::size_t k = 0; k < nodes; ++k) truth.translation(k) = Vec3(0.02, -0.01, 0.015);
  const BodyPose pose = BodyPose::identity(model->skin.skeleton.size());
  const auto frame = solvable_frame(model, truth, pose);

  neural::UpdateNetwork net(tiny_spec(nodes), 3);
  NicpConfig cfg;
  cfg.iterations = 1;
  cfg.reg_weight = 0.0;
  TrainConfig tc;
  tc.epochs = 150;
  tc.adamw.lr = 3e-3f;
  tc.adamw.weight_decay = 0.0f;
  tc.loss_samples = 300;
  int callbacks = 0;
  tc.on_epoch = [&](int, double) { ++callbacks; };
  const auto report = train(net, {frame}, model, cfg, tc);
  REQUIRE(report.epoch_loss.size() == 150);
  CHECK(callbacks == 150);
  CHECK(report.epoch_loss.back() < 0.01 * report.epoch_loss.front());
}

TEST_CASE("training reports divergence") {
  auto model = small_model(6, 8, 6);
  const auto nodes = model->graph.node_count();
  std::mt19937_64 rng(31);
  const auto frame =
      solvable_frame(model, test::random_params(nodes, rng, 0.2, 0.03), BodyPose::identity(model->skin.skeleton.size()));
  neural::UpdateNetwork net(tiny_spec(nodes), 3);
  NicpConfig cfg;
  cfg.iterations = 1;
  TrainConfig tc;
  tc.epochs = 20;
  tc.adamw.lr = 1.0f;
  tc.divergence_factor = 2.0;
  CHECK_THROWS_AS(train(net, {frame}, model, cfg, tc), std::runtime_error);
  CHECK_THROWS_AS(train(net, {}, model, cfg, tc), std::invalid_argument);
}
