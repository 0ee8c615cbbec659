#include "nicp/sensing/garment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nicp::sensing {

using deform::Joint;
using deform::Skeleton;
using deform::SkinWeight;
using geometry::Vec3;

namespace {

constexpr int kRoot = 0;
constexpr int kLeftHip = 1;
constexpr int kRightHip = 2;
constexpr int kLeftKnee = 3;
constexpr int kRightKnee = 4;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Skeleton lower_body_skeleton() {
  Skeleton s;
  s.joints = {{"root", -1, Vec3(0.0, 0.95, 0.0)},
              {"left_hip", kRoot, Vec3(0.09, 0.9, 0.0)},
              {"right_hip", kRoot, Vec3(-0.09, 0.9, 0.0)},
              {"left_knee", kLeftHip, Vec3(0.09, 0.5, 0.0)},
              {"right_knee", kRightHip, Vec3(-0.09, 0.5, 0.0)}};
  return s;
}

deform::SkinnedTemplate make_garment(const GarmentOptions& o) {
  if (o.rings < 2 || o.segments < 3) throw std::invalid_argument("make_garment: need >= 2 rings and >= 3 segments");
  if (!(o.waist_y > o.hem_y) || !(o.waist_radius > 0.0) || !(o.hem_radius > 0.0)) {
    throw std::invalid_argument("make_garment: invalid dimensions");
  }
  deform::SkinnedTemplate t;
  t.skeleton = lower_body_skeleton();
  auto& mesh = t.rest;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < o.rings; ++i) {
    const double h = static_cast<double>(i) / (o.rings - 1);  // 0 at the waist, 1 at the hem
    const double y = o.waist_y + (o.hem_y - o.waist_y) * h;
    const double base = o.waist_radius + (o.hem_radius - o.waist_radius) * std::pow(h, 0.8);
    for (int j = 0; j < o.segments; ++j) {
      const double phi = two_pi * j / o.segments;
      const double r = base * (1.0 + o.pleat_depth * h * std::sin(o.pleats * phi));
      const Vec3 p(r * std::sin(phi), y, r * std::cos(phi));
      mesh.vertices.push_back(p);
      mesh.uvs.emplace_back(static_cast<double>(j) / o.segments, h);

      // Legs take over towards the hem, split left/right by the side of the
      // body; the knee share grows below mid-thigh.
      const double leg = 0.7 * smoothstep(0.1, 0.9, h);
      const double left = std::clamp(0.5 + 0.5 * p.x() / base, 0.0, 1.0);
      const double knee = 0.5 * smoothstep(0.55, 1.0, h);
      std::vector<SkinWeight> w;
      auto push = [&w](int joint, double value) {
        if (value > 0.0) w.push_back({joint, value});
      };
      push(kRoot, 1.0 - leg);
      push(kLeftHip, leg * left * (1.0 - knee));
      push(kRightHip, leg * (1.0 - left) * (1.0 - knee));
      push(kLeftKnee, leg * left * knee);
      push(kRightKnee, leg * (1.0 - left) * knee);
      double sum = 0.0;
      for (const auto& s : w) sum += s.weight;
      for (auto& s : w) s.weight /= sum;
      t.weights.push_back(std::move(w));
    }
  }
  for (int i = 0; i + 1 < o.rings; ++i) {
    for (int j = 0; j < o.segments; ++j) {
      const int a = i * o.segments + j;
      const int b = i * o.segments + (j + 1) % o.segments;
      const int c = a + o.segments;
      const int d = b + o.segments;
      mesh.faces.push_back({a, c, b});
      mesh.faces.push_back({b, c, d});
    }
  }
  mesh.normals = geometry::vertex_normals(mesh);
  t.validate();
  return t;
}

}  // namespace nicp::sensing
