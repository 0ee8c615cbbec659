#pragma once

#include <filesystem>

#include "nicp/neural/network.hpp"

namespace nicp::neural {

inline constexpr int kWeightsVersion = 1;

// Container: 8-byte magic, little-endian uint64 header length, JSON header
// (version, spec, layer shapes, parameter count, step count, CRC-32 of the
// payload), then the float32 parameters.
void save_weights(const UpdateNetwork& network, const std::filesystem::path& path);
UpdateNetwork load_weights(const std::filesystem::path& path);

std::uint32_t weights_checksum(const VectorXf& parameters);

}  // namespace nicp::neural
