#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/common/work_meter.hpp"
#include "nicp/deform/graph.hpp"
#include "nicp/nicp/track.hpp"
#include "nicp/sensing/garment.hpp"
#include "nicp/sensing/sequence.hpp"

namespace nicp::bench {

// Raised for unusable configurations; the CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One ablation row: which network inputs are live and how many iterations.
struct Variant {
  std::string name;
  bool residual = true;
  bool gradient = true;
  int iterations = 3;

  std::string inputs() const;  // "P", "P,r", "P,g" or "P,r,g"
};

// The five rows of the input ablation, the last one being the full method.
std::vector<Variant> standard_variants();

struct TrainSettings {
  int epochs = 10;
  float lr = 1e-4f;
  float weight_decay = 1e-2f;
  int loss_samples = 4096;
  float residual_scale = 40.0f;
  float gradient_scale = 1e5f;
  std::uint64_t init_seed = 0;
};

struct SolverSettings {
  int lm_iterations = 20;
  double lm_damping = 1e-4;
  int lbfgs_iterations = 50;
  int lbfgs_memory = 10;
  int nlcg_iterations = 50;
};

struct ExperimentConfig {
  std::filesystem::path dataset = "dataset";
  std::filesystem::path output = "results";
  std::uint64_t seed = 0;
  int threads = 1;
  ClockKind clock = ClockKind::Virtual;

  int node_count = 125;
  deform::GraphBuildOptions graph;
  sensing::GarmentOptions garment;
  sensing::SequenceOptions sequence;
  tracking::NicpConfig nicp;
  TrainSettings train;
  SolverSettings solvers;

  std::vector<std::string> methods = {"nicp", "lm", "lbfgs", "nlcg"};
  std::string benchmark_variant = "full";
  std::vector<Variant> variants = standard_variants();
  double heldout_fraction = 0.2;
  int mse_samples = 20000;
  double mse_threshold = 50.0;  // mm^2, for time-to-threshold statistics
  int smoothing_window = 1;

  // Throws ValidationError.
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; relative paths resolve against `base`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  const Variant& variant(const std::string& name) const;  // throws ValidationError
  std::string hash() const;                                // CRC-32 of the canonical JSON, hex
};

std::string clock_name(ClockKind kind);
ClockKind parse_clock(const std::string& name);

}  // namespace nicp::bench
