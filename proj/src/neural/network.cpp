#include "nicp/neural/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace nicp::neural {

NetworkSpec NetworkSpec::standard(int node_count) {
  NetworkSpec s;
  s.stages = {{32, 0.1f, {16, 16, 32}},
              {32, 0.2f, {64, 64, 128}},
              {32, 0.4f, {256, 256, 256}},
              {32, 0.8f, {256, 256, 512}}};
  s.head = {512, 512, 512, 6 * node_count};
  s.gradient_channels = 6 * node_count;
  return s;
}

void NetworkSpec::validate() const {
  if (stages.empty()) throw std::invalid_argument("NetworkSpec: at least one set-abstraction stage required");
  for (const auto& st : stages) {
    if (st.centers < 1 || !(st.radius > 0.0f) || st.widths.empty()) {
      throw std::invalid_argument("NetworkSpec: invalid set-abstraction stage");
    }
    for (int w : st.widths) {
      if (w < 1) throw std::invalid_argument("NetworkSpec: layer widths must be positive");
    }
  }
  if (head.empty()) throw std::invalid_argument("NetworkSpec: empty head");
  for (int w : head) {
    if (w < 1) throw std::invalid_argument("NetworkSpec: layer widths must be positive");
  }
  if (gradient_channels < 0 || max_neighbors < 1) throw std::invalid_argument("NetworkSpec: invalid sizes");
  if (output_dim() % 6 != 0) throw std::invalid_argument("NetworkSpec: output size must be 6 per graph node");
  if (!(last_layer_init >= 0.0f)) throw std::invalid_argument("NetworkSpec: invalid last-layer init");
}

nlohmann::json NetworkSpec::to_json() const {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const auto& st : stages) {
    j["stages"].push_back({{"centers", st.centers}, {"radius", st.radius}, {"widths", st.widths}});
  }
  j["head"] = head;
  j["gradient_channels"] = gradient_channels;
  j["max_neighbors"] = max_neighbors;
  j["slope"] = slope;
  j["last_layer_init"] = last_layer_init;
  j["use_residual"] = use_residual;
  j["use_gradient"] = use_gradient;
  j["residual_scale"] = residual_scale;
  j["gradient_scale"] = gradient_scale;
  return j;
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec s;
  for (const auto& st : j.at("stages")) {
    s.stages.push_back({st.at("centers").get<int>(), st.at("radius").get<float>(),
                        st.at("widths").get<std::vector<int>>()});
  }
  s.head = j.at("head").get<std::vector<int>>();
  s.gradient_channels = j.at("gradient_channels").get<int>();
  s.max_neighbors = j.value("max_neighbors", kMaxNeighbors);
  s.slope = j.value("slope", 0.2f);
  s.last_layer_init = j.value("last_layer_init", 1e-6f);
  s.use_residual = j.value("use_residual", true);
  s.use_gradient = j.value("use_gradient", true);
  s.residual_scale = j.value("residual_scale", 1.0f);
  s.gradient_scale = j.value("gradient_scale", 1.0f);
  s.validate();
  return s;
}

void UpdateNetwork::build_layout() {
  spec_.validate();
  layers_.clear();
  stage_begin_.clear();
  std::size_t offset = 0;
  auto add = [&](int in, int out) {
    layers_.push_back({offset, in, out});
    offset += static_cast<std::size_t>(out) * (in + 1);
  };
  int channels = NetworkSpec::kPointChannels;
  for (const auto& st : spec_.stages) {
    stage_begin_.push_back(layers_.size());
    int in = 3 + channels;
    for (int w : st.widths) {
      add(in, w);
      in = w;
    }
    channels = st.widths.back();
  }
  stage_begin_.push_back(layers_.size());
  int in = channels + spec_.gradient_channels;
  for (int w : spec_.head) {
    add(in, w);
    in = w;
  }
  if (params_.size() == 0) params_ = VectorXf::Zero(static_cast<Eigen::Index>(offset));
  if (params_.size() != static_cast<Eigen::Index>(offset)) {
    throw std::invalid_argument("UpdateNetwork: parameter vector has " + std::to_string(params_.size()) +
                                " entries, the spec needs " + std::to_string(offset));
  }
}

UpdateNetwork::UpdateNetwork(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  build_layout();
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& info = layers_[l];
    const float bound = l == last_layer() ? spec_.last_layer_init : 1.0f / std::sqrt(static_cast<float>(info.in));
    const std::size_t count = static_cast<std::size_t>(info.out) * (info.in + 1);
    for (std::size_t i = 0; i < count; ++i) params_[info.offset + i] = uniform(rng, -bound, bound);
  }
}

UpdateNetwork::UpdateNetwork(NetworkSpec spec, VectorXf parameters)
    : spec_(std::move(spec)), params_(std::move(parameters)) {
  if (params_.size() == 0) throw std::invalid_argument("UpdateNetwork: empty parameter vector");
  build_layout();
}

LayerView UpdateNetwork::layer(std::size_t i) const {
  const auto& info = layers_.at(i);
  return {params_.data() + info.offset, info.in, info.out};
}

std::vector<LayerView> UpdateNetwork::stage_layers(std::size_t stage) const {
  std::vector<LayerView> out;
  for (std::size_t l = stage_begin_[stage]; l < stage_begin_[stage + 1]; ++l) out.push_back(layer(l));
  return out;
}

VectorXf UpdateNetwork::forward(const NetworkInput& input, Tape* tape) const {
  const Eigen::Index n = input.positions.cols();
  if (n == 0) throw std::invalid_argument("UpdateNetwork::forward: empty point cloud");
  check_shape(input.residuals, 3, n, "UpdateNetwork::forward residuals");
  check_shape(input.gradient, spec_.gradient_channels, 1, "UpdateNetwork::forward gradient");

  MatrixXf features(NetworkSpec::kPointChannels, n);
  features.topRows<3>() = input.positions;
  if (spec_.use_residual) {
    features.bottomRows<3>() = spec_.residual_scale * input.residuals;
  } else {
    features.bottomRows<3>().setZero();
  }
  Tensor::from_matrix(features).check_finite("input features");

  if (tape) {
    *tape = Tape{};
    tape->stages.resize(spec_.stages.size());
  }
  Matrix3Xf xyz = input.positions;
  for (std::size_t s = 0; s < spec_.stages.size(); ++s) {
    const auto mlp = stage_layers(s);
    SaOutput out = sa_stage(xyz, features, spec_.stages[s], mlp, spec_.slope, spec_.max_neighbors,
                            tape ? &tape->stages[s] : nullptr);
    xyz = std::move(out.xyz);
    features = std::move(out.features);
  }

  const Eigen::Index pooled = features.rows();
  MatrixXf x(pooled + spec_.gradient_channels, 1);
  Eigen::VectorXi arg(pooled);
  for (Eigen::Index ch = 0; ch < pooled; ++ch) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < features.cols(); ++c) {
      if (features(ch, c) > features(ch, best)) best = c;
    }
    arg[ch] = static_cast<int>(best);
    x(ch, 0) = features(ch, best);
  }
  if (spec_.gradient_channels > 0) {
    if (spec_.use_gradient) {
      x.bottomRows(spec_.gradient_channels) = spec_.gradient_scale * input.gradient;
    } else {
      x.bottomRows(spec_.gradient_channels).setZero();
    }
  }
  if (tape) tape->global_argmax = arg;

  for (std::size_t l = stage_begin_.back(); l < layers_.size(); ++l) {
    MatrixXf y = dense_forward(layer(l), x);
    if (tape) {
      tape->head_inputs.push_back(std::move(x));
      tape->head_pre.push_back(y);
    }
    if (l == last_layer()) {
      x = std::move(y);
    } else {
      x = y.unaryExpr([s = spec_.slope](float v) { return leaky_relu(v, s); });
    }
  }
  Tensor::from_matrix(x).check_finite("network output");
  if (tape) tape->recorded = true;
  return x.col(0);
}

void UpdateNetwork::backward(const Tape& tape, const VectorXf& upstream, VectorXf& gradient) const {
  if (!tape.recorded) throw std::logic_error("UpdateNetwork::backward: no forward pass recorded");
  check_shape(upstream, spec_.output_dim(), 1, "UpdateNetwork::backward upstream");
  if (gradient.size() == 0) gradient = VectorXf::Zero(params_.size());
  if (gradient.size() != params_.size()) throw std::invalid_argument("UpdateNetwork::backward: gradient size");

  MatrixXf dx = upstream;
  const std::size_t head_begin = stage_begin_.back();
  for (std::size_t l = layers_.size(); l-- > head_begin;) {
    const std::size_t k = l - head_begin;
    MatrixXf dy = dx;
    if (l != last_layer()) {
      dy = dx.binaryExpr(tape.head_pre[k], [s = spec_.slope](float d, float v) { return d * leaky_relu_grad(v, s); });
    }
    dx = dense_backward(layer(l), tape.head_inputs[k], dy, gradient.data() + layers_[l].offset, true);
  }

  const auto& last = tape.stages.back();
  const Eigen::Index pooled = tape.global_argmax.size();
  MatrixXf d_features = MatrixXf::Zero(pooled, last.grouping.group_count());
  for (Eigen::Index ch = 0; ch < pooled; ++ch) d_features(ch, tape.global_argmax[ch]) += dx(ch, 0);

  for (std::size_t s = spec_.stages.size(); s-- > 0;) {
    const auto mlp = stage_layers(s);
    std::vector<float*> grads;
    for (std::size_t l = stage_begin_[s]; l < stage_begin_[s + 1]; ++l) {
      grads.push_back(gradient.data() + layers_[l].offset);
    }
    d_features = sa_stage_backward(tape.stages[s], d_features, mlp, spec_.slope, grads, s > 0);
  }
}

}  // namespace nicp::neural
