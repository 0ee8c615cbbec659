#pragma once

#include "nicp/deform/skinning.hpp"
#include "nicp/geometry/camera.hpp"

namespace nicp::tracking {

using deform::BodyPose;
using deform::Rigid;
using deform::Skeleton;
using geometry::PinholeCamera;
using geometry::PointCloud;
using geometry::TriMesh;
using geometry::Vec3;

// World -> root body frame of `pose`, and back.
PointCloud canonicalize(const PointCloud& cloud, const Skeleton& skeleton, const BodyPose& pose);
TriMesh canonicalize(const TriMesh& mesh, const Skeleton& skeleton, const BodyPose& pose);
PinholeCamera canonicalize(const PinholeCamera& camera, const Skeleton& skeleton, const BodyPose& pose);

PointCloud to_world(const PointCloud& cloud, const Skeleton& skeleton, const BodyPose& pose);
TriMesh to_world(const TriMesh& mesh, const Skeleton& skeleton, const BodyPose& pose);

// Point-wise application of a rigid transform.
std::vector<Vec3> transform_points(const Rigid& t, const std::vector<Vec3>& points);

}  // namespace nicp::tracking
