#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nicp/deform/model.hpp"
#include "nicp/sensing/depth.hpp"

namespace nicp::sensing {

using deform::BodyPose;
using deform::DeformationModel;
using deform::GraphParams;

struct RigSpec {
  int cameras = 3;            // evenly spaced around the vertical axis
  double distance = 2.0;      // from the look-at target, meters
  double elevation = 0.9;     // camera height, meters
  Vec3 target = Vec3(0.0, 0.72, 0.0);
  double start_angle = 0.0;   // radians, first camera on +z
  double focal = 330.0;       // pixels
  int width = 256;
  int height = 256;
  int stride = 3;             // fusion subsampling
  double noise_sigma = 0.002; // meters
  double dropout = 0.0;

  void validate() const;
};

struct TrajectorySpec {
  int keyframe_interval = 10;
  int anchors = 12;                   // random control points of the spatial field
  double kernel_width = 0.15;         // meters
  double rotation_amplitude = 0.25;   // radians
  double translation_amplitude = 0.04;  // meters
  double max_rotation = 0.5;
  double max_translation = 0.1;
  double pose_amplitude = 1.0;        // scales the scripted body motion

  void validate() const;
};

struct SequenceOptions {
  int frames = 200;
  int dense_samples = 30000;
  RigSpec rig;
  TrajectorySpec trajectory;
  std::uint64_t seed = 0;
};

struct SequenceFrame {
  int id = 0;
  GraphParams theta;   // ground truth
  BodyPose pose;
  TriMesh mesh;        // D(theta*) under the pose
  PointCloud dense;    // area-uniform samples of `mesh`
  PointCloud sparse;   // fused noisy depth from the rig
};

struct SyntheticSequence {
  std::vector<PinholeCamera> cameras;
  std::vector<SequenceFrame> frames;
};

std::vector<PinholeCamera> make_rig(const RigSpec& rig);

// Scripted walking-in-place motion: root sway and drift, alternating hip
// swing and knee bend.
BodyPose scripted_pose(std::size_t joint_count, int frame, double amplitude);

// Smooth per-node parameter trajectories: spatially smooth random fields at
// keyframes, Catmull-Rom interpolation in time, magnitudes clamped.
std::vector<GraphParams> ground_truth_trajectory(const deform::DeformationGraph& graph, int frames,
                                                 const TrajectorySpec& spec, std::uint64_t seed);

// Renders, fuses and samples one frame.
SequenceFrame make_frame(const DeformationModel& model, const std::vector<PinholeCamera>& cameras, int id,
                         GraphParams theta, BodyPose pose, const SequenceOptions& options);

SyntheticSequence generate_sequence(const DeformationModel& model, const SequenceOptions& options);

// Independent seed for a (base, stream, index) triple.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace nicp::sensing
