#include "nicp/sensing/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nicp/geometry/metrics.hpp"

namespace nicp::sensing {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum Stream : std::uint64_t { kTrajectory = 1, kDense = 2, kNoise = 3 };

Eigen::VectorXd catmull_rom(const Eigen::VectorXd& p0, const Eigen::VectorXd& p1, const Eigen::VectorXd& p2,
                            const Eigen::VectorXd& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

void clamp_norm(Eigen::Ref<Eigen::VectorXd> v, double max_norm) {
  const double n = v.norm();
  if (n > max_norm) v *= max_norm / n;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

void RigSpec::validate() const {
  if (cameras < 1) throw std::invalid_argument("rig: at least one camera required");
  if (!(distance > 0.0) || !(focal > 0.0) || width < 1 || height < 1) {
    throw std::invalid_argument("rig: invalid camera geometry");
  }
  if (stride < 1) throw std::invalid_argument("rig: stride must be >= 1");
  if (!(noise_sigma >= 0.0) || !(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("rig: invalid noise settings");
  }
}

void TrajectorySpec::validate() const {
  if (keyframe_interval < 1 || anchors < 1 || !(kernel_width > 0.0)) {
    throw std::invalid_argument("trajectory: invalid keyframe or field settings");
  }
  if (!(rotation_amplitude >= 0.0) || !(translation_amplitude >= 0.0) || !(max_rotation >= 0.0) ||
      max_rotation >= std::numbers::pi || !(max_translation >= 0.0) || !(pose_amplitude >= 0.0)) {
    throw std::invalid_argument("trajectory: invalid amplitudes");
  }
}

std::vector<PinholeCamera> make_rig(const RigSpec& rig) {
  rig.validate();
  std::vector<PinholeCamera> cams;
  for (int c = 0; c < rig.cameras; ++c) {
    const double a = rig.start_angle + 2.0 * std::numbers::pi * c / rig.cameras;
    const Vec3 eye(rig.target.x() + rig.distance * std::sin(a), rig.elevation,
                   rig.target.z() + rig.distance * std::cos(a));
    cams.push_back(PinholeCamera::look_at(eye, rig.target, Vec3::UnitY(), rig.focal, rig.width, rig.height));
  }
  return cams;
}

BodyPose scripted_pose(std::size_t joint_count, int frame, double amplitude) {
  BodyPose pose = BodyPose::identity(joint_count);
  const double phase = 2.0 * std::numbers::pi * frame / 40.0;
  const double a = amplitude;
  if (joint_count > 0) {
    pose.rotations[0] = Vec3(0.0, 0.15 * a * std::sin(0.5 * phase), 0.04 * a * std::sin(phase));
    pose.root_translation = Vec3(0.05 * a * std::sin(0.5 * phase), 0.01 * a * std::sin(2.0 * phase), 0.0);
  }
  if (joint_count >= 5) {
    pose.rotations[1] = Vec3(0.35 * a * std::sin(phase), 0.0, 0.0);
    pose.rotations[2] = Vec3(-0.35 * a * std::sin(phase), 0.0, 0.0);
    pose.rotations[3] = Vec3(0.2 * a * (1.0 - std::cos(phase)), 0.0, 0.0);
    pose.rotations[4] = Vec3(0.2 * a * (1.0 + std::cos(phase)), 0.0, 0.0);
  }
  return pose;
}

std::vector<GraphParams> ground_truth_trajectory(const deform::DeformationGraph& graph, int frames,
                                                 const TrajectorySpec& spec, std::uint64_t seed) {
  spec.validate();
  if (frames < 1) throw std::invalid_argument("ground_truth_trajectory: need at least one frame");
  const std::size_t k = graph.node_count();
  Eigen::AlignedBox3d box;
  for (const auto& g : graph.nodes) box.extend(g);

  const int keys = (frames - 1) / spec.keyframe_interval + 2;
  std::vector<Eigen::VectorXd> key_values;
  for (int key = 0; key < keys; ++key) {
    std::mt19937_64 rng(derive_seed(seed, kTrajectory, static_cast<std::uint64_t>(key)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec3> anchor_pos;
    std::vector<Eigen::Matrix<double, 6, 1>> anchor_val;
    for (int a = 0; a < spec.anchors; ++a) {
      const Vec3 u(geometry::unit_uniform(rng), geometry::unit_uniform(rng), geometry::unit_uniform(rng));
      anchor_pos.push_back(box.min() + u.cwiseProduct(box.sizes()));
      Eigen::Matrix<double, 6, 1> v;
      for (int i = 0; i < 6; ++i) v[i] = normal(rng);
      v.head<3>() *= spec.rotation_amplitude;
      v.tail<3>() *= spec.translation_amplitude;
      anchor_val.push_back(v);
    }
    Eigen::VectorXd values = Eigen::VectorXd::Zero(6 * static_cast<Eigen::Index>(k));
    for (std::size_t n = 0; n < k; ++n) {
      Eigen::Matrix<double, 6, 1> acc = Eigen::Matrix<double, 6, 1>::Zero();
      double wsum = 0.0;
      for (int a = 0; a < spec.anchors; ++a) {
        const double d2 = (graph.nodes[n] - anchor_pos[a]).squaredNorm();
        const double w = std::exp(-0.5 * d2 / (spec.kernel_width * spec.kernel_width));
        acc += w * anchor_val[a];
        wsum += w;
      }
      if (wsum > 1e-300) values.segment<6>(6 * static_cast<Eigen::Index>(n)) = acc / wsum;
    }
    key_values.push_back(std::move(values));
  }

  std::vector<GraphParams> out;
  out.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    const int seg = f / spec.keyframe_interval;
    const double t = static_cast<double>(f % spec.keyframe_interval) / spec.keyframe_interval;
    const auto& p1 = key_values[seg];
    const auto& p2 = key_values[std::min(seg + 1, keys - 1)];
    const auto& p0 = key_values[std::max(seg - 1, 0)];
    const auto& p3 = key_values[std::min(seg + 2, keys - 1)];
    Eigen::VectorXd v = catmull_rom(p0, p1, p2, p3, t);
    for (std::size_t n = 0; n < k; ++n) {
      const auto base = 6 * static_cast<Eigen::Index>(n);
      clamp_norm(v.segment<3>(base), spec.max_rotation);
      clamp_norm(v.segment<3>(base + 3), spec.max_translation);
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

SequenceFrame make_frame(const DeformationModel& model, const std::vector<PinholeCamera>& cameras, int id,
                         GraphParams theta, BodyPose pose, const SequenceOptions& options) {
  SequenceFrame frame;
  frame.id = id;
  frame.mesh = deform::deform_full(model.skin, model.graph, theta, pose);
  frame.theta = std::move(theta);
  frame.pose = std::move(pose);
  const auto dense = geometry::sample_surface(frame.mesh, options.dense_samples,
                                              derive_seed(options.seed, kDense, static_cast<std::uint64_t>(id)));
  frame.dense.points = dense;

  std::vector<DepthMap> maps;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const DepthMap clean = render_depth(frame.mesh, cameras[c]);
    const auto seed = derive_seed(options.seed, kNoise, static_cast<std::uint64_t>(id) * 1024 + c);
    maps.push_back(add_depth_noise(clean, options.rig.noise_sigma, options.rig.dropout, seed));
  }
  frame.sparse = fuse_point_cloud(maps, options.rig.stride);
  return frame;
}

SyntheticSequence generate_sequence(const DeformationModel& model, const SequenceOptions& options) {
  model.validate();
  options.rig.validate();
  if (options.frames < 1 || options.dense_samples < 1) {
    throw std::invalid_argument("generate_sequence: frames and dense samples must be positive");
  }
  SyntheticSequence seq;
  seq.cameras = make_rig(options.rig);
  const auto thetas = ground_truth_trajectory(model.graph, options.frames, options.trajectory, options.seed);
  for (int f = 0; f < options.frames; ++f) {
    seq.frames.push_back(make_frame(model, seq.cameras, f, thetas[f],
                                    scripted_pose(model.skin.skeleton.size(), f, options.trajectory.pose_amplitude),
                                    options));
  }
  return seq;
}

}  // namespace nicp::sensing
