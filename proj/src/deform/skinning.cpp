#include "nicp/deform/skinning.hpp"

#include "nicp/common/work_meter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nicp::deform {

void Skeleton::validate() const {
  if (joints.empty()) throw std::invalid_argument("Skeleton: no joints");
  if (joints[0].parent != -1) throw std::invalid_argument("Skeleton: joint 0 must be the root");
  for (std::size_t j = 1; j < joints.size(); ++j) {
    const int p = joints[j].parent;
    if (p < 0 || p >= static_cast<int>(j)) {
      throw std::invalid_argument("Skeleton: joint " + std::to_string(j) +
                                  " must have a parent with a lower index");
    }
  }
}

void SkinnedTemplate::validate() const {
  rest.validate();
  skeleton.validate();
  if (weights.size() != rest.vertices.size()) {
    throw std::invalid_argument("SkinnedTemplate: one weight list per vertex required");
  }
  for (std::size_t v = 0; v < weights.size(); ++v) {
    double sum = 0.0;
    for (const auto& w : weights[v]) {
      if (w.joint < 0 || w.joint >= static_cast<int>(skeleton.size())) {
        throw std::invalid_argument("SkinnedTemplate: vertex " + std::to_string(v) +
                                    " references an unknown joint");
      }
      if (!(w.weight >= 0.0)) {
        throw std::invalid_argument("SkinnedTemplate: negative weight at vertex " +
                                    std::to_string(v));
      }
      sum += w.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("SkinnedTemplate: weights of vertex " + std::to_string(v) +
                                  " do not sum to 1");
    }
  }
}

BodyPose BodyPose::identity(std::size_t joint_count) {
  BodyPose p;
  p.rotations.assign(joint_count, Vec3::Zero());
  return p;
}

void BodyPose::validate(std::size_t joint_count) const {
  if (rotations.size() != joint_count) {
    throw std::invalid_argument("BodyPose: expected " + std::to_string(joint_count) +
                                " joint rotations, got " + std::to_string(rotations.size()));
  }
  if (!root_translation.allFinite()) throw std::invalid_argument("BodyPose: non-finite translation");
  for (const auto& r : rotations) {
    if (!r.allFinite()) throw std::invalid_argument("BodyPose: non-finite rotation");
    if (r.norm() >= std::numbers::pi) {
      throw std::invalid_argument("BodyPose: rotation magnitude must be below pi");
    }
  }
}

namespace {

Rigid local_transform(const Joint& joint, const Vec3& axis_angle) {
  Rigid t = Rigid::Identity();
  const Mat3 r = rotation_matrix(axis_angle);
  t.linear() = r;
  t.translation() = joint.pivot - r * joint.pivot;
  return t;
}

}  // namespace

std::vector<Rigid> joint_transforms(const Skeleton& skeleton, const BodyPose& pose) {
  skeleton.validate();
  pose.validate(skeleton.size());
  std::vector<Rigid> g(skeleton.size());
  for (std::size_t j = 0; j < skeleton.size(); ++j) {
    const Rigid local = local_transform(skeleton.joints[j], pose.rotations[j]);
    if (j == 0) {
      Rigid root = local;
      root.translation() += pose.root_translation;
      g[j] = root;
    } else {
      g[j] = g[static_cast<std::size_t>(skeleton.joints[j].parent)] * local;
    }
  }
  return g;
}

Rigid root_transform(const Skeleton& skeleton, const BodyPose& pose) {
  skeleton.validate();
  pose.validate(skeleton.size());
  Rigid root = local_transform(skeleton.joints[0], pose.rotations[0]);
  root.translation() += pose.root_translation;
  return root;
}

BodyPose root_relative(const BodyPose& pose) {
  BodyPose out = pose;
  if (!out.rotations.empty()) out.rotations[0].setZero();
  out.root_translation.setZero();
  return out;
}

SkinningMap skinning_map(const SkinnedTemplate& skin, const BodyPose& pose) {
  skin.validate();
  const auto g = joint_transforms(skin.skeleton, pose);
  SkinningMap map;
  const std::size_t n = skin.rest.vertices.size();
  bool identity = true;
  for (const auto& t : g) identity &= t.linear() == Mat3::Identity() && t.translation() == Vec3::Zero();
  if (identity) {
    // Exact identity regardless of weight round-off.
    map.linear.assign(n, Mat3::Identity());
    map.offset.assign(n, Vec3::Zero());
    return map;
  }
  map.linear.assign(n, Mat3::Zero());
  map.offset.assign(n, Vec3::Zero());
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& w : skin.weights[v]) {
      const Rigid& t = g[static_cast<std::size_t>(w.joint)];
      map.linear[v] += w.weight * t.linear();
      map.offset[v] += w.weight * t.translation();
    }
  }
  return map;
}

TriMesh lbs(const SkinnedTemplate& skin, const BodyPose& pose) {
  const SkinningMap map = skinning_map(skin, pose);
  TriMesh out = skin.rest;
  out.vertices = lbs_vertices(map, skin.rest.vertices);
  out.normals.clear();
  return out;
}

std::vector<Vec3> lbs_vertices(const SkinningMap& map, const std::vector<Vec3>& canonical) {
  if (canonical.size() != map.linear.size()) {
    throw std::invalid_argument("lbs_vertices: vertex count mismatch");
  }
  std::vector<Vec3> out(canonical.size());
  for (std::size_t v = 0; v < canonical.size(); ++v) out[v] = map.apply(v, canonical[v]);
  work::add(static_cast<double>(canonical.size()) * work::Cost::kVertexInfluence);
  return out;
}

}  // namespace nicp::deform
