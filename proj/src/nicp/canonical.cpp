#include "nicp/nicp/canonical.hpp"

namespace nicp::tracking {

std::vector<Vec3> transform_points(const Rigid& t, const std::vector<Vec3>& points) {
  const Eigen::Matrix3d r = t.linear();
  const Vec3 o = t.translation();
  std::vector<Vec3> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = r * points[i] + o;
  return out;
}

namespace {

// Inverse with an exactly transposed rotation.
Rigid inverse(const Rigid& t) {
  Rigid inv = Rigid::Identity();
  inv.linear() = t.linear().transpose();
  inv.translation() = -(inv.linear() * t.translation());
  return inv;
}

Rigid world_to_root(const Skeleton& skeleton, const BodyPose& pose) {
  return inverse(deform::root_transform(skeleton, pose));
}

}  // namespace

PointCloud canonicalize(const PointCloud& cloud, const Skeleton& skeleton, const BodyPose& pose) {
  PointCloud out = cloud;
  out.points = transform_points(world_to_root(skeleton, pose), cloud.points);
  return out;
}

TriMesh canonicalize(const TriMesh& mesh, const Skeleton& skeleton, const BodyPose& pose) {
  const Rigid t = world_to_root(skeleton, pose);
  TriMesh out = mesh;
  out.vertices = transform_points(t, mesh.vertices);
  for (auto& n : out.normals) n = t.linear() * n;
  return out;
}

PinholeCamera canonicalize(const PinholeCamera& camera, const Skeleton& skeleton, const BodyPose& pose) {
  const Rigid t = world_to_root(skeleton, pose);
  PinholeCamera out = camera;
  out.rotation = t.linear() * camera.rotation;
  out.translation = t.linear() * camera.translation + t.translation();
  return out;
}

PointCloud to_world(const PointCloud& cloud, const Skeleton& skeleton, const BodyPose& pose) {
  PointCloud out = cloud;
  out.points = transform_points(deform::root_transform(skeleton, pose), cloud.points);
  return out;
}

TriMesh to_world(const TriMesh& mesh, const Skeleton& skeleton, const BodyPose& pose) {
  const Rigid t = deform::root_transform(skeleton, pose);
  TriMesh out = mesh;
  out.vertices = transform_points(t, mesh.vertices);
  for (auto& n : out.normals) n = t.linear() * n;
  return out;
}

}  // namespace nicp::tracking
