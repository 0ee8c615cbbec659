#pragma once

#include <Eigen/Core>

#include "nicp/geometry/mesh.hpp"

namespace nicp::geometry {

// Pinhole camera. `intrinsics` maps camera-frame directions to homogeneous
// pixel coordinates; (rotation, translation) maps camera frame -> root
// frame, so the camera center in the root frame is `translation`.
// Pixel (x, y) refers to integer coordinates; depth is the camera-frame z.
struct PinholeCamera {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0;
  int height = 0;

  static PinholeCamera from_focal(double focal, int width, int height);
  // Camera at `eye` looking at `target`; `up` fixes the roll (image y axis
  // points roughly along -up).
  static PinholeCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                               double focal, int width, int height);

  void validate() const;

  Vec3 center() const { return translation; }
  Vec3 to_camera(const Vec3& world) const { return rotation.transpose() * (world - translation); }
  Vec3 to_world(const Vec3& cam) const { return rotation * cam + translation; }
  // Pixel coordinates (x, y) and depth z of a world point.
  Vec3 project(const Vec3& world) const;
  // World point at depth z along the ray through pixel (x, y).
  Vec3 unproject(double x, double y, double depth) const;
  // Camera-frame direction K^-1 [x, y, 1]^T.
  Vec3 pixel_direction(double x, double y) const;
};

}  // namespace nicp::geometry
