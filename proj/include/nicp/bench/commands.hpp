#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/bench/config.hpp"
#include "nicp/bench/dataset.hpp"
#include "nicp/neural/network.hpp"
#include "nicp/solvers/trace.hpp"

namespace nicp::bench {

// Network and tracker settings for one ablation variant.
neural::NetworkSpec variant_spec(const ExperimentConfig& config, const Variant& variant);
tracking::NicpConfig variant_nicp(const ExperimentConfig& config, const Variant& variant);
std::filesystem::path weights_path(const ExperimentConfig& config, const std::string& variant);

// Loads trained weights; throws std::runtime_error naming the variant when absent.
neural::UpdateNetwork load_variant(const ExperimentConfig& config, const Variant& variant);

// Surface error of the last trace record whose time does not exceed `time_s`.
double mse_at_time(const solvers::SolveTrace& trace, double time_s);
// First time at which the trace reaches `threshold` (mm^2), or a negative value.
double time_to_threshold(const solvers::SolveTrace& trace, double threshold);

struct OrderingCheck {
  std::string name;
  std::string relation;  // "<=" (with tolerance) or "<"
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
};

// The ablation orderings over mean held-out MSE per variant name:
// full <= P_g_N3 < P_r_N3, full < P_r_g_N1, P_N1 the worst. `tolerance` is
// the relative band granted to the "<=" comparisons.
std::vector<OrderingCheck> ablation_checks(const std::map<std::string, double>& mse, double tolerance = 0.05);

nlohmann::json environment_fingerprint(const ExperimentConfig& config);

// Each command writes below config.output (generate writes config.dataset)
// and returns a JSON summary of what it wrote.
nlohmann::json cmd_generate(const ExperimentConfig& config);
nlohmann::json cmd_train(const ExperimentConfig& config, const std::vector<std::string>& variants);
nlohmann::json cmd_track(const ExperimentConfig& config, const std::string& variant);
nlohmann::json cmd_benchmark(const ExperimentConfig& config);
nlohmann::json cmd_ablation(const ExperimentConfig& config);

}  // namespace nicp::bench
