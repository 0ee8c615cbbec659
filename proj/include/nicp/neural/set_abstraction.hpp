#pragma once

#include <span>
#include <vector>

#include "nicp/neural/tensor.hpp"

namespace nicp::neural {

inline constexpr int kMaxNeighbors = 32;

struct SaStageSpec {
  int centers = 32;
  float radius = 0.1f;
  std::vector<int> widths;  // shared per-point MLP
};

// Farthest-point sampling that does not depend on the input order: it starts
// from the point nearest the bounding-box center and breaks distance ties by
// lexicographic (coordinates, features) order.
std::vector<int> farthest_point_sampling(const Matrix3Xf& xyz, const MatrixXf& features, int count);

// Ball-query neighborhoods: group c holds source[offsets[c] .. offsets[c+1]),
// nearest first, at most `max_neighbors` entries, exact duplicates
// (same coordinates and features) collapsed.
struct Grouping {
  std::vector<int> centers;
  std::vector<int> source;
  std::vector<int> offsets;

  int group_count() const { return static_cast<int>(centers.size()); }
  int column_count() const { return static_cast<int>(source.size()); }
};

Grouping group_neighbors(const Matrix3Xf& xyz, const MatrixXf& features, const std::vector<int>& centers,
                         float radius, int max_neighbors = kMaxNeighbors);

// Everything the backward pass of one stage needs.
struct SaTape {
  Grouping grouping;
  int input_points = 0;
  int input_channels = 0;
  std::vector<MatrixXf> inputs;  // per MLP layer
  std::vector<MatrixXf> pre;     // pre-activations per MLP layer
  Eigen::MatrixXi argmax;        // (out channels x centers) grouped column of each max
};

struct SaOutput {
  Matrix3Xf xyz;      // selected centers
  MatrixXf features;  // pooled features, (last width x centers)
};

// One set-abstraction stage: select centers, group neighbors, run the shared
// MLP (leaky rectifier after every layer) on [relative xyz; features] and
// max-pool per center. Throws if there are fewer points than centers.
SaOutput sa_stage(const Matrix3Xf& xyz, const MatrixXf& features, const SaStageSpec& spec,
                  std::span<const LayerView> mlp, float slope, int max_neighbors = kMaxNeighbors,
                  SaTape* tape = nullptr);

// Reverse pass. `layer_grads[i]` points at the gradient storage of layer i
// (same layout as LayerView); gradients are accumulated. Returns the
// gradient with respect to the input features when requested.
MatrixXf sa_stage_backward(const SaTape& tape, const MatrixXf& d_pooled, std::span<const LayerView> mlp,
                           float slope, std::span<float* const> layer_grads, bool input_gradient);

// Reverse pass through a dense layer: accumulates dW, db and returns W^T dy.
MatrixXf dense_backward(const LayerView& layer, const MatrixXf& x, const MatrixXf& dy, float* grad,
                        bool input_gradient = true);

}  // namespace nicp::neural
