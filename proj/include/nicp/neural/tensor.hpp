#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nicp::neural {

using MatrixXf = Eigen::MatrixXf;
using VectorXf = Eigen::VectorXf;
using Matrix3Xf = Eigen::Matrix3Xf;

// Dense single-precision array with an explicit shape. Two-dimensional
// tensors are stored column-major as (channels x points).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<float> values);
  static Tensor from_matrix(const MatrixXf& m);

  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  int dim(std::size_t i) const { return shape_.at(i); }
  MatrixXf matrix() const;  // 2-D tensors only
  bool all_finite() const;
  void check_finite(const char* where) const;  // throws in debug builds only

 private:
  std::vector<int> shape_;
  std::vector<float> values_;
};

void check_shape(const MatrixXf& m, Eigen::Index rows, Eigen::Index cols, const std::string& where);

inline float leaky_relu(float x, float slope) { return x > 0.0f ? x : slope * x; }
inline float leaky_relu_grad(float x, float slope) { return x > 0.0f ? 1.0f : slope; }

// Non-owning view of one fully connected layer inside a flat parameter
// vector: weight (out x in, column-major) followed by bias (out).
struct LayerView {
  const float* data = nullptr;
  int in = 0;
  int out = 0;

  Eigen::Map<const MatrixXf> weight() const { return {data, out, in}; }
  Eigen::Map<const VectorXf> bias() const { return {data + static_cast<std::ptrdiff_t>(out) * in, out}; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(out) * (in + 1); }
};

// y = W x + b for every column of x.
MatrixXf dense_forward(const LayerView& layer, const MatrixXf& x);

// Uniform float in [lo, hi) from a 64-bit generator (top 24 bits).
template <typename Rng>
float uniform(Rng& rng, float lo, float hi) {
  const float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
  return lo + (hi - lo) * u;
}

}  // namespace nicp::neural
