#pragma once

#include <array>

#include <Eigen/Core>

namespace nicp::deform {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Mat3 skew(const Vec3& v);

// Rodrigues' formula for an axis-angle vector (angle = norm, radians).
Mat3 rotation_matrix(const Vec3& axis_angle);

// Exact partial derivatives dR/dr_i, i = 0..2, of rotation_matrix at
// `axis_angle`. Uses the closed form
//   dR/dr_i = (r_i [r]x + [r x (I - R) e_i]x) R / |r|^2
// away from zero and its second-order expansion near zero.
std::array<Mat3, 3> rotation_derivatives(const Vec3& axis_angle);

// Inverse of rotation_matrix for angles in [0, pi).
Vec3 axis_angle_from_matrix(const Mat3& rotation);

}  // namespace nicp::deform
