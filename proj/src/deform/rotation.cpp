#include "nicp/deform/rotation.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace nicp::deform {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_matrix(const Vec3& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  const Mat3 k = skew(axis_angle);
  if (theta2 < 1e-16) {
    // Second-order series; exact to double precision at this magnitude.
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * k * k;
}

std::array<Mat3, 3> rotation_derivatives(const Vec3& axis_angle) {
  std::array<Mat3, 3> d;
  const double theta2 = axis_angle.squaredNorm();
  if (theta2 < 1e-16) {
    const Mat3 k = skew(axis_angle);
    for (int i = 0; i < 3; ++i) {
      const Mat3 e = skew(Vec3::Unit(i));
      d[i] = e + 0.5 * (e * k + k * e);
    }
    return d;
  }
  const Mat3 r = rotation_matrix(axis_angle);
  const Mat3 k = skew(axis_angle);
  const Mat3 i_minus_r = Mat3::Identity() - r;
  for (int i = 0; i < 3; ++i) {
    const Vec3 w = axis_angle.cross(i_minus_r.col(i));
    d[i] = (axis_angle[i] * k + skew(w)) * r / theta2;
  }
  return d;
}

Vec3 axis_angle_from_matrix(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

}  // namespace nicp::deform
