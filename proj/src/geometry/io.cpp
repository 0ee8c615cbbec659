#include "nicp/geometry/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace nicp::geometry {
namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

// ---- OBJ ------------------------------------------------------------------

struct ObjCorner {
  int v = -1, vt = -1, vn = -1;
};

int obj_index(const std::string& token, std::size_t count) {
  const int i = std::stoi(token);
  return i < 0 ? static_cast<int>(count) + i : i - 1;
}

ObjCorner parse_corner(const std::string& s, std::size_t nv, std::size_t nvt, std::size_t nvn) {
  ObjCorner c;
  const auto a = s.find('/');
  c.v = obj_index(s.substr(0, a), nv);
  if (a == std::string::npos) return c;
  const auto b = s.find('/', a + 1);
  const std::string vt = s.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1);
  if (!vt.empty()) c.vt = obj_index(vt, nvt);
  if (b != std::string::npos && b + 1 < s.size()) c.vn = obj_index(s.substr(b + 1), nvn);
  return c;
}

// ---- PLY ------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& t) {
  if (t == "char" || t == "int8") return PlyType::Int8;
  if (t == "uchar" || t == "uint8") return PlyType::UInt8;
  if (t == "short" || t == "int16") return PlyType::Int16;
  if (t == "ushort" || t == "uint16") return PlyType::UInt16;
  if (t == "int" || t == "int32") return PlyType::Int32;
  if (t == "uint" || t == "uint32") return PlyType::UInt32;
  if (t == "float" || t == "float32") return PlyType::Float32;
  if (t == "double" || t == "float64") return PlyType::Float64;
  throw std::runtime_error("PLY: unknown property type '" + t + "'");
}

template <typename T>
T read_raw(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("PLY: unexpected end of file");
  return v;
}

double read_scalar(std::istream& in, PlyType t) {
  switch (t) {
    case PlyType::Int8: return read_raw<std::int8_t>(in);
    case PlyType::UInt8: return read_raw<std::uint8_t>(in);
    case PlyType::Int16: return read_raw<std::int16_t>(in);
    case PlyType::UInt16: return read_raw<std::uint16_t>(in);
    case PlyType::Int32: return read_raw<std::int32_t>(in);
    case PlyType::UInt32: return read_raw<std::uint32_t>(in);
    case PlyType::Float32: return read_raw<float>(in);
    case PlyType::Float64: return read_raw<double>(in);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::vector<PlyElement> read_ply_header(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw std::runtime_error("PLY: missing magic");
  std::vector<PlyElement> elements;
  bool binary_le = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (key == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) throw std::runtime_error("PLY: property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(ct);
        p.type = parse_ply_type(it);
      } else {
        ls >> p.name;
        p.type = parse_ply_type(type);
      }
      elements.back().properties.push_back(p);
    } else if (key == "end_header") {
      if (!binary_le) throw std::runtime_error("PLY: only binary_little_endian is supported");
      return elements;
    }
  }
  throw std::runtime_error("PLY: missing end_header");
}

struct PlyData {
  TriMesh mesh;
  std::vector<int> camera_ids;
};

PlyData read_ply(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  const auto elements = read_ply_header(in);
  PlyData data;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      data.mesh.vertices.resize(e.count, Vec3::Zero());
      bool has_normal = false, has_uv = false, has_cam = false;
      for (const auto& p : e.properties) {
        has_normal |= p.name == "nx";
        has_uv |= p.name == "u" || p.name == "s";
        has_cam |= p.name == "camera_id";
      }
      if (has_normal) data.mesh.normals.resize(e.count, Vec3::Zero());
      if (has_uv) data.mesh.uvs.resize(e.count, Vec2::Zero());
      if (has_cam) data.camera_ids.resize(e.count, -1);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.properties) {
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(read_scalar(in, p.count_type));
            for (std::size_t k = 0; k < n; ++k) read_scalar(in, p.type);
            continue;
          }
          const double v = read_scalar(in, p.type);
          if (p.name == "x") data.mesh.vertices[i].x() = v;
          else if (p.name == "y") data.mesh.vertices[i].y() = v;
          else if (p.name == "z") data.mesh.vertices[i].z() = v;
          else if (p.name == "nx") data.mesh.normals[i].x() = v;
          else if (p.name == "ny") data.mesh.normals[i].y() = v;
          else if (p.name == "nz") data.mesh.normals[i].z() = v;
          else if (p.name == "u" || p.name == "s") data.mesh.uvs[i].x() = v;
          else if (p.name == "v" || p.name == "t") data.mesh.uvs[i].y() = v;
          else if (p.name == "camera_id") data.camera_ids[i] = static_cast<int>(v);
        }
      }
    } else if (e.name == "face") {
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.properties) {
          if (!p.is_list) {
            read_scalar(in, p.type);
            continue;
          }
          const auto n = static_cast<std::size_t>(read_scalar(in, p.count_type));
          std::vector<int> poly(n);
          for (auto& idx : poly) idx = static_cast<int>(read_scalar(in, p.type));
          if (p.name != "vertex_indices" && p.name != "vertex_index") continue;
          for (std::size_t k = 2; k < n; ++k) data.mesh.faces.push_back({poly[0], poly[k - 1], poly[k]});
        }
      }
    } else {
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.properties) {
          const std::size_t n = p.is_list ? static_cast<std::size_t>(read_scalar(in, p.count_type)) : 1;
          for (std::size_t k = 0; k < n; ++k) read_scalar(in, p.type);
        }
      }
    }
  }
  return data;
}

template <typename T>
void write_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

TriMesh read_obj(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  std::vector<Vec3> positions, normals;
  std::vector<Vec2> uvs;
  std::vector<std::vector<ObjCorner>> polys;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      positions.push_back(v);
    } else if (key == "vn") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      normals.push_back(v);
    } else if (key == "vt") {
      Vec2 v;
      ls >> v.x() >> v.y();
      uvs.push_back(v);
    } else if (key == "f") {
      std::vector<ObjCorner> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(parse_corner(tok, positions.size(), uvs.size(), normals.size()));
      polys.push_back(std::move(poly));
    }
  }

  TriMesh mesh;
  mesh.vertices = std::move(positions);
  bool uv_aligned = !uvs.empty(), normal_aligned = !normals.empty();
  for (const auto& poly : polys) {
    for (const auto& c : poly) {
      uv_aligned &= c.vt == c.v;
      normal_aligned &= c.vn == c.v;
    }
    for (std::size_t k = 2; k < poly.size(); ++k) mesh.faces.push_back({poly[0].v, poly[k - 1].v, poly[k].v});
  }
  if (uv_aligned && uvs.size() == mesh.vertices.size()) mesh.uvs = std::move(uvs);
  if (normal_aligned && normals.size() == mesh.vertices.size()) mesh.normals = std::move(normals);
  mesh.validate();
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = open_out(path, std::ios::out);
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.uvs) out << "vt " << t.x() << ' ' << t.y() << '\n';
  for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  const bool uv = !mesh.uvs.empty(), nrm = !mesh.normals.empty();
  for (const auto& f : mesh.faces) {
    out << 'f';
    for (int idx : f) {
      const int i = idx + 1;
      out << ' ' << i;
      if (uv || nrm) out << '/' << (uv ? std::to_string(i) : "");
      if (nrm) out << '/' << i;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TriMesh read_ply_mesh(const std::filesystem::path& path) {
  auto data = read_ply(path);
  data.mesh.validate();
  return std::move(data.mesh);
}

void write_ply_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = open_out(path, std::ios::binary);
  const bool nrm = !mesh.normals.empty(), uv = !mesh.uvs.empty();
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (nrm) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (uv) out << "property double u\nproperty double v\n";
  out << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) write_raw(out, mesh.vertices[i][k]);
    if (nrm) for (int k = 0; k < 3; ++k) write_raw(out, mesh.normals[i][k]);
    if (uv) for (int k = 0; k < 2; ++k) write_raw(out, mesh.uvs[i][k]);
  }
  for (const auto& f : mesh.faces) {
    write_raw<std::uint8_t>(out, 3);
    for (int idx : f) write_raw<std::int32_t>(out, idx);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PointCloud read_ply_cloud(const std::filesystem::path& path) {
  auto data = read_ply(path);
  PointCloud cloud;
  cloud.points = std::move(data.mesh.vertices);
  cloud.camera_ids = std::move(data.camera_ids);
  cloud.validate();
  return cloud;
}

void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  auto out = open_out(path, std::ios::binary);
  const bool cam = cloud.has_camera_ids();
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cam) out << "property int camera_id\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    for (int k = 0; k < 3; ++k) write_raw(out, cloud.points[i][k]);
    if (cam) write_raw<std::int32_t>(out, cloud.camera_ids[i]);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace nicp::geometry
