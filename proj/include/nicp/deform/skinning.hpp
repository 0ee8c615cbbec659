#pragma once

#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "nicp/deform/rotation.hpp"
#include "nicp/geometry/mesh.hpp"

namespace nicp::deform {

using geometry::TriMesh;
using Rigid = Eigen::Isometry3d;

struct Joint {
  std::string name;
  int parent = -1;          // -1 only for the root
  Vec3 pivot = Vec3::Zero();  // rest-pose rotation center, canonical space
};

// Joint tree; parents precede children, joint 0 is the single root.
struct Skeleton {
  std::vector<Joint> joints;

  std::size_t size() const { return joints.size(); }
  void validate() const;
};

struct SkinWeight {
  int joint = 0;
  double weight = 0.0;
};

struct SkinnedTemplate {
  TriMesh rest;
  std::vector<std::vector<SkinWeight>> weights;  // per vertex, sparse
  Skeleton skeleton;

  void validate() const;
};

// Per-joint axis-angle rotations about the joint pivots plus a root
// translation applied after the root rotation.
struct BodyPose {
  std::vector<Vec3> rotations;
  Vec3 root_translation = Vec3::Zero();

  static BodyPose identity(std::size_t joint_count);
  void validate(std::size_t joint_count) const;
};

// Global joint transforms G_j = G_parent * T(pivot) R(r_j) T(-pivot), with
// the root additionally translated.
std::vector<Rigid> joint_transforms(const Skeleton& skeleton, const BodyPose& pose);

// Rigid transform of the root joint; maps root-frame coordinates to world.
Rigid root_transform(const Skeleton& skeleton, const BodyPose& pose);

// The same pose with the root transform removed, i.e. expressed in the root
// body frame.
BodyPose root_relative(const BodyPose& pose);

// Blended per-vertex affine maps v -> linear[v] * v + offset[v]. LBS is
// linear in the canonical vertex position for a fixed pose.
struct SkinningMap {
  std::vector<Mat3> linear;
  std::vector<Vec3> offset;

  Vec3 apply(std::size_t v, const Vec3& p) const { return linear[v] * p + offset[v]; }
};

SkinningMap skinning_map(const SkinnedTemplate& skin, const BodyPose& pose);

// Linear blend skinning of the rest mesh. Throws std::invalid_argument on
// invalid weights or pose.
TriMesh lbs(const SkinnedTemplate& skin, const BodyPose& pose);

// LBS applied to arbitrary canonical positions that share the template's
// vertex order (e.g. an embedded-deformed rest mesh).
std::vector<Vec3> lbs_vertices(const SkinningMap& map, const std::vector<Vec3>& canonical);

}  // namespace nicp::deform
