#include "nicp/geometry/camera.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace nicp::geometry {

PinholeCamera PinholeCamera::from_focal(double focal, int width, int height) {
  PinholeCamera cam;
  cam.intrinsics << focal, 0.0, 0.5 * (width - 1), 0.0, focal, 0.5 * (height - 1), 0.0, 0.0, 1.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

PinholeCamera PinholeCamera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                                     double focal, int width, int height) {
  PinholeCamera cam = from_focal(focal, width, height);
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  cam.rotation.col(0) = x;
  cam.rotation.col(1) = y;
  cam.rotation.col(2) = z;
  cam.translation = eye;
  return cam;
}

void PinholeCamera::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("PinholeCamera: empty resolution");
  if (intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0) {
    throw std::invalid_argument("PinholeCamera: intrinsics must be upper triangular");
  }
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0) || intrinsics(2, 2) != 1.0) {
    throw std::invalid_argument("PinholeCamera: focal lengths must be positive");
  }
  const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
  if (!rtr.isIdentity(1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("PinholeCamera: rotation is not a proper orthonormal matrix");
  }
  if (!translation.allFinite()) throw std::invalid_argument("PinholeCamera: non-finite translation");
}

Vec3 PinholeCamera::project(const Vec3& world) const {
  const Vec3 c = to_camera(world);
  const Vec3 h = intrinsics * c;
  return {h.x() / h.z(), h.y() / h.z(), c.z()};
}

Vec3 PinholeCamera::pixel_direction(double x, double y) const {
  // Upper-triangular solve of K d = [x, y, 1].
  const double fx = intrinsics(0, 0), s = intrinsics(0, 1), cx = intrinsics(0, 2);
  const double fy = intrinsics(1, 1), cy = intrinsics(1, 2);
  const double dy = (y - cy) / fy;
  const double dx = (x - cx - s * dy) / fx;
  return {dx, dy, 1.0};
}

Vec3 PinholeCamera::unproject(double x, double y, double depth) const {
  return to_world(depth * pixel_direction(x, y));
}

}  // namespace nicp::geometry
