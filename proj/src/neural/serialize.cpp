#include "nicp/neural/serialize.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace nicp::neural {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'I', 'C', 'P', 'W', 'G', 'T', '1'};

}  // namespace

std::uint32_t weights_checksum(const VectorXf& parameters) {
  const auto* bytes = reinterpret_cast<const Bytef*>(parameters.data());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t left = static_cast<std::size_t>(parameters.size()) * sizeof(float);
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, bytes, chunk);
    bytes += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void save_weights(const UpdateNetwork& network, const std::filesystem::path& path) {
  nlohmann::json header;
  header["version"] = kWeightsVersion;
  header["spec"] = network.spec().to_json();
  header["layers"] = nlohmann::json::array();
  for (const auto& l : network.layers()) {
    header["layers"].push_back({{"weight", {l.out, l.in}}, {"bias", {l.out}}});
  }
  header["parameter_count"] = network.parameter_count();
  header["steps"] = network.steps();
  header["crc32"] = weights_checksum(network.parameters());
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(network.parameters().data()),
            static_cast<std::streamsize>(network.parameter_count() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

UpdateNetwork load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error(path.string() + ": not a weights file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 26)) throw std::runtime_error(path.string() + ": corrupt header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path.string() + ": truncated header");
  const auto header = nlohmann::json::parse(text);
  if (!header.contains("version")) throw std::runtime_error(path.string() + ": missing version");
  if (header.at("version").get<int>() != kWeightsVersion) {
    throw std::runtime_error(path.string() + ": unsupported weights version");
  }
  NetworkSpec spec = NetworkSpec::from_json(header.at("spec"));
  const auto count = header.at("parameter_count").get<std::size_t>();
  VectorXf params(static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error(path.string() + ": truncated payload");
  if (weights_checksum(params) != header.at("crc32").get<std::uint32_t>()) {
    throw std::runtime_error(path.string() + ": checksum mismatch");
  }
  UpdateNetwork net(std::move(spec), std::move(params));
  const auto& layers = header.at("layers");
  if (layers.size() != net.layers().size()) throw std::runtime_error(path.string() + ": layer table mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto shape = layers[i].at("weight").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != net.layers()[i].out || shape[1] != net.layers()[i].in) {
      throw std::runtime_error(path.string() + ": layer " + std::to_string(i) + " shape mismatch");
    }
  }
  net.set_steps(header.value("steps", std::int64_t{0}));
  return net;
}

}  // namespace nicp::neural
