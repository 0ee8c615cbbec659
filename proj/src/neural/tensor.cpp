#include "nicp/neural/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "nicp/common/work_meter.hpp"

namespace nicp::neural {

namespace {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)), values_(element_count(shape_), 0.0f) {}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != element_count(shape_)) {
    throw std::invalid_argument("Tensor: value count does not match shape");
  }
}

Tensor Tensor::from_matrix(const MatrixXf& m) {
  return Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                std::vector<float>(m.data(), m.data() + m.size()));
}

MatrixXf Tensor::matrix() const {
  if (shape_.size() != 2) throw std::logic_error("Tensor::matrix: tensor is not 2-D");
  return Eigen::Map<const MatrixXf>(values_.data(), shape_[0], shape_[1]);
}

bool Tensor::all_finite() const {
  for (float v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const char* where) const {
#ifndef NDEBUG
  if (!all_finite()) throw std::runtime_error(std::string("non-finite tensor values after ") + where);
#else
  (void)where;
#endif
}

void check_shape(const MatrixXf& m, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
    throw std::invalid_argument(where + ": expected shape " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
}

MatrixXf dense_forward(const LayerView& layer, const MatrixXf& x) {
  if (x.rows() != layer.in) {
    throw std::invalid_argument("dense_forward: input has " + std::to_string(x.rows()) +
                                " channels, layer expects " + std::to_string(layer.in));
  }
  MatrixXf y = layer.weight() * x;
  y.colwise() += layer.bias();
  work::add(static_cast<double>(layer.in) * layer.out * x.cols() * work::Cost::kFloatMac);
  return y;
}

}  // namespace nicp::neural
