#include "nicp/sensing/depth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "nicp/common/work_meter.hpp"

namespace nicp::sensing {

DepthMap DepthMap::empty_for(const PinholeCamera& camera) {
  camera.validate();
  DepthMap m;
  m.camera = camera;
  m.depth.assign(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
  return m;
}

std::size_t DepthMap::hit_count() const {
  return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](double d) { return d > 0.0; }));
}

void DepthMap::validate() const {
  camera.validate();
  if (depth.size() != static_cast<std::size_t>(camera.width) * camera.height) {
    throw std::invalid_argument("DepthMap: raster size does not match the camera resolution");
  }
  for (double d : depth) {
    if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("DepthMap: depths must be finite and >= 0");
  }
}

DepthMap render_depth(const TriMesh& mesh, const PinholeCamera& camera, double near) {
  DepthMap map = DepthMap::empty_for(camera);
  const int w = camera.width;
  const int h = camera.height;
  std::vector<Vec3> proj(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) proj[i] = camera.project(mesh.vertices[i]);

  for (const auto& f : mesh.faces) {
    const Vec3& a = proj[f[0]];
    const Vec3& b = proj[f[1]];
    const Vec3& c = proj[f[2]];
    if (a.z() <= near || b.z() <= near || c.z() <= near) continue;
    const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (area == 0.0 || !std::isfinite(area)) continue;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        // Screen-space barycentrics of the pixel position.
        const double w0 = ((b.x() - x) * (c.y() - y) - (b.y() - y) * (c.x() - x)) / area;
        const double w1 = ((c.x() - x) * (a.y() - y) - (c.y() - y) * (a.x() - x)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        // 1/z is affine in screen space.
        const double z = 1.0 / (w0 / a.z() + w1 / b.z() + w2 / c.z());
        double& d = map.at(x, y);
        if (d == 0.0 || z < d) d = z;
      }
    }
    work::add(static_cast<double>(std::max(0, x1 - x0 + 1)) * std::max(0, y1 - y0 + 1) * work::Cost::kRayTriangle);
  }
  return map;
}

PointCloud fuse_point_cloud(std::span<const DepthMap> maps, int stride) {
  if (maps.empty()) throw std::invalid_argument("fuse_point_cloud: no depth maps");
  if (stride < 1) throw std::invalid_argument("fuse_point_cloud: stride must be >= 1");
  PointCloud cloud;
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const DepthMap& m = maps[c];
    m.validate();
    for (int y = 0; y < m.height(); y += stride) {
      for (int x = 0; x < m.width(); x += stride) {
        const double d = m.at(x, y);
        if (d <= 0.0) continue;
        cloud.points.push_back(m.camera.unproject(x, y, d));
        cloud.camera_ids.push_back(static_cast<int>(c));
      }
    }
  }
  return cloud;
}

OffsetField depth_offset(const DepthMap& sensor, const DepthMap& rendered, bool include_translation) {
  if (sensor.width() != rendered.width() || sensor.height() != rendered.height()) {
    throw std::invalid_argument("depth_offset: depth maps differ in resolution");
  }
  sensor.validate();
  rendered.validate();
  const PinholeCamera& cam = rendered.camera;
  OffsetField out;
  out.width = cam.width;
  out.height = cam.height;
  out.offsets.assign(static_cast<std::size_t>(cam.width) * cam.height, Vec3::Zero());
  out.valid.assign(out.offsets.size(), 0);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double big_d = sensor.at(x, y);
      const double small_d = rendered.at(x, y);
      if (big_d <= 0.0 || small_d <= 0.0) continue;
      const std::size_t i = static_cast<std::size_t>(y) * cam.width + x;
      Vec3 o = cam.rotation * ((small_d - big_d) * cam.pixel_direction(x, y));
      if (include_translation) o += cam.translation;
      out.offsets[i] = o;
      out.valid[i] = 1;
    }
  }
  return out;
}

DepthMap add_depth_noise(const DepthMap& map, double sigma, double dropout, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_depth_noise: sigma must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("add_depth_noise: dropout must be in [0, 1)");
  DepthMap out = map;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& d : out.depth) {
    if (d <= 0.0) continue;
    const bool drop = unit(rng) < dropout;
    double n = normal(rng);
    while (std::abs(n) > 4.0) n = normal(rng);
    if (drop) {
      d = 0.0;
      continue;
    }
    const double noisy = d + sigma * n;
    d = noisy > 0.0 ? noisy : 0.0;
  }
  return out;
}

nlohmann::json camera_json(const PinholeCamera& c) {
  auto mat = [](const Eigen::Matrix3d& m) {
    std::vector<double> v;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) v.push_back(m(r, k));
    }
    return v;
  };
  return {{"intrinsics", mat(c.intrinsics)},
          {"rotation", mat(c.rotation)},
          {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
          {"width", c.width},
          {"height", c.height}};
}

PinholeCamera camera_from_json(const nlohmann::json& j) {
  auto mat = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    if (v.size() != 9) throw std::runtime_error("camera JSON: expected 9 matrix entries");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m(r, k) = v[3 * r + k];
    }
    return m;
  };
  PinholeCamera c;
  c.intrinsics = mat(j.at("intrinsics"));
  c.rotation = mat(j.at("rotation"));
  const auto t = j.at("translation").get<std::vector<double>>();
  if (t.size() != 3) throw std::runtime_error("camera JSON: expected 3 translation entries");
  c.translation = Vec3(t[0], t[1], t[2]);
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.validate();
  return c;
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p) { return p.string() + ".json"; }

}  // namespace

void write_depth(const std::filesystem::path& path, const DepthMap& map) {
  map.validate();
  std::vector<float> raster(map.depth.begin(), map.depth.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size() * sizeof(float)));
  std::ofstream meta(sidecar(path));
  if (!meta) throw std::runtime_error("cannot open " + sidecar(path).string() + " for writing");
  meta << nlohmann::json{{"camera", camera_json(map.camera)}, {"format", "float32"}}.dump(2) << '\n';
}

DepthMap read_depth(const std::filesystem::path& path) {
  std::ifstream meta(sidecar(path));
  if (!meta) throw std::runtime_error("missing depth sidecar " + sidecar(path).string());
  const auto j = nlohmann::json::parse(meta);
  DepthMap map = DepthMap::empty_for(camera_from_json(j.at("camera")));
  std::vector<float> raster(map.depth.size());
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size() * sizeof(float)));
  if (!in) throw std::runtime_error(path.string() + ": truncated depth raster");
  std::copy(raster.begin(), raster.end(), map.depth.begin());
  map.validate();
  return map;
}

}  // namespace nicp::sensing
