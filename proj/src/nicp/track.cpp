#include "nicp/nicp/track.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nicp::tracking {

void NicpConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("NicpConfig: at least one iteration required");
  if (subsample < 1) throw std::invalid_argument("NicpConfig: subsample size must be positive");
  if (!(reg_weight >= 0.0)) throw std::invalid_argument("NicpConfig: regularizer weight must be >= 0");
}

PointCloud subsample(const PointCloud& cloud, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("subsample: count must be positive");
  if (cloud.size() <= static_cast<std::size_t>(count)) return cloud;
  std::vector<int> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with an explicit bounded draw (portable across
  // standard libraries).
  for (int i = 0; i < count; ++i) {
    const std::uint64_t span = idx.size() - static_cast<std::size_t>(i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % span);
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  out.points.reserve(idx.size());
  for (int i : idx) {
    out.points.push_back(cloud.points[i]);
    if (cloud.has_camera_ids()) out.camera_ids.push_back(cloud.camera_ids[i]);
  }
  return out;
}

namespace {

solvers::IcpProblem canonical_problem(std::shared_ptr<const DeformationModel> model, const PointCloud& cloud,
                                      const BodyPose& pose, const NicpConfig& config,
                                      const std::vector<PinholeCamera>& cameras) {
  config.validate();
  if (!model) throw std::invalid_argument("NicpFrame: no model");
  if (cloud.empty()) throw std::invalid_argument("NicpFrame: empty point cloud");
  const Skeleton& skeleton = model->skin.skeleton;
  solvers::IcpProblem p;
  p.target = subsample(canonicalize(cloud, skeleton, pose), config.subsample, config.seed);
  if (p.target.empty()) throw std::invalid_argument("NicpFrame: empty point cloud after preprocessing");
  p.pose = deform::root_relative(pose);
  p.model = std::move(model);
  p.mode = config.mode;
  p.reg_weight = config.reg_weight;
  for (const auto& c : cameras) p.cameras.push_back(canonicalize(c, skeleton, pose));
  return p;
}

}  // namespace

NicpFrame::NicpFrame(std::shared_ptr<const DeformationModel> model, const PointCloud& cloud, const BodyPose& pose,
                     const NicpConfig& config, const std::vector<PinholeCamera>& cameras)
    : pose_(pose), evaluator_(canonical_problem(std::move(model), cloud, pose, config, cameras)) {}

NicpFrame::Features NicpFrame::features(const GraphParams& theta) const {
  const auto matches = evaluator_.correspond(theta);
  Eigen::VectorXd grad;
  Features f;
  f.loss = evaluator_.frozen_loss(theta, matches, &grad);
  f.matches = matches.size();

  const auto& pts = evaluator_.problem().target.points;
  const auto n = static_cast<Eigen::Index>(pts.size());
  f.input.positions.resize(3, n);
  f.input.residuals = neural::Matrix3Xf::Zero(3, n);
  for (Eigen::Index i = 0; i < n; ++i) f.input.positions.col(i) = pts[i].cast<float>();
  for (const auto& m : matches) f.input.residuals.col(m.target) = (m.point - pts[m.target]).cast<float>();
  f.input.gradient = (0.5 / static_cast<double>(matches.size()) * grad).cast<float>();
  return f;
}

TriMesh NicpFrame::world_mesh(const GraphParams& theta) const {
  return to_world(evaluator_.posed().mesh(theta), skeleton(), pose_);
}

TrackResult track(const neural::UpdateNetwork& network, const PointCloud& cloud, const BodyPose& pose,
                  std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                  const solvers::TraceOptions& trace, const std::vector<PinholeCamera>& cameras) {
  if (!model) throw std::invalid_argument("track: no model");
  if (network.spec().output_dim() != static_cast<int>(model->parameter_count())) {
    throw std::invalid_argument("track: network output size does not match the deformation graph");
  }
  solvers::TraceOptions options = trace;
  if (options.reference) {
    options.reference = std::make_shared<TriMesh>(canonicalize(*trace.reference, model->skin.skeleton, pose));
  }

  StepClock setup(options.clock);
  setup.start();
  const NicpFrame frame(model, cloud, pose, config, cameras);
  setup.pause();

  solvers::TraceRecorder recorder("nicp", frame.evaluator().posed(), options);
  recorder.start();
  GraphParams theta(model->graph.node_count());
  auto feats = frame.features(theta);
  recorder.record(theta, feats.loss, 0.0);
  for (int it = 0; it < config.iterations; ++it) {
    const Eigen::VectorXd delta = network.forward(feats.input).cast<double>();
    theta.vector() += delta;
    if (it + 1 < config.iterations) {
      feats = frame.features(theta);
      recorder.record(theta, feats.loss, delta.norm());
    } else {
      // The loss after the last update is reporting only.
      recorder.pause();
      feats = frame.features(theta);
      recorder.resume();
      recorder.record(theta, feats.loss, delta.norm());
    }
  }
  TrackResult result;
  result.trace = recorder.finish(theta);
  for (auto& r : result.trace.records) r.time_s += setup.seconds();
  result.mesh = frame.world_mesh(theta);
  result.theta = std::move(theta);
  return result;
}

}  // namespace nicp::tracking
