#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/neural/set_abstraction.hpp"

namespace nicp::neural {

struct NetworkSpec {
  std::vector<SaStageSpec> stages;
  std::vector<int> head;       // fully connected widths; the last one is the output size
  int gradient_channels = 0;   // length of the gradient input concatenated after pooling
  int max_neighbors = kMaxNeighbors;
  float slope = 0.2f;          // leaky rectifier
  float last_layer_init = 1e-6f;
  // Input selection for ablations: disabled inputs are fed as zeros.
  bool use_residual = true;
  bool use_gradient = true;
  // Multipliers applied to the residual and gradient inputs.
  float residual_scale = 1.0f;
  float gradient_scale = 1.0f;

  // Four set-abstraction stages and a 512-512-512-6K head.
  static NetworkSpec standard(int node_count);

  static constexpr int kPointChannels = 6;  // position, residual
  int output_dim() const { return head.empty() ? 0 : head.back(); }
  void validate() const;

  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
};

struct NetworkInput {
  Matrix3Xf positions;  // root frame, meters
  Matrix3Xf residuals;  // C(p) - p per point
  VectorXf gradient;    // normalized J^T r
};

struct Tape {
  std::vector<SaTape> stages;
  Eigen::VectorXi global_argmax;
  std::vector<MatrixXf> head_inputs;
  std::vector<MatrixXf> head_pre;
  bool recorded = false;
};

class UpdateNetwork {
 public:
  UpdateNetwork(NetworkSpec spec, std::uint64_t seed);
  UpdateNetwork(NetworkSpec spec, VectorXf parameters);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  const VectorXf& parameters() const { return params_; }
  VectorXf& parameters() { return params_; }

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  void count_step() { ++steps_; }

  struct LayerInfo {
    std::size_t offset = 0;
    int in = 0;
    int out = 0;
  };
  const std::vector<LayerInfo>& layers() const { return layers_; }
  LayerView layer(std::size_t i) const;
  std::size_t last_layer() const { return layers_.size() - 1; }

  // Delta theta for one cloud; records the tape when given.
  VectorXf forward(const NetworkInput& input, Tape* tape = nullptr) const;

  // Accumulates d(loss)/d(parameters) into `gradient` (resized and zeroed if
  // empty) for an upstream gradient on the output. The inputs are constants.
  void backward(const Tape& tape, const VectorXf& upstream, VectorXf& gradient) const;

 private:
  void build_layout();
  std::vector<LayerView> stage_layers(std::size_t stage) const;

  NetworkSpec spec_;
  std::vector<LayerInfo> layers_;
  std::vector<std::size_t> stage_begin_;  // first layer index of each stage, plus head
  VectorXf params_;
  std::int64_t steps_ = 0;
};

}  // namespace nicp::neural
