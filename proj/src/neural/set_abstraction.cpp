#include "nicp/neural/set_abstraction.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nicp/common/work_meter.hpp"

namespace nicp::neural {

namespace {

// -1 / 0 / 1 lexicographic comparison of the (xyz, features) keys of two points.
int compare_keys(const Matrix3Xf& xyz, const MatrixXf& features, int a, int b) {
  for (int r = 0; r < 3; ++r) {
    if (xyz(r, a) != xyz(r, b)) return xyz(r, a) < xyz(r, b) ? -1 : 1;
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    if (features(r, a) != features(r, b)) return features(r, a) < features(r, b) ? -1 : 1;
  }
  return 0;
}

float squared_distance(const Matrix3Xf& xyz, int a, const Eigen::Vector3f& p) {
  const float dx = xyz(0, a) - p.x();
  const float dy = xyz(1, a) - p.y();
  const float dz = xyz(2, a) - p.z();
  return dx * dx + dy * dy + dz * dz;
}

void check_inputs(const Matrix3Xf& xyz, const MatrixXf& features) {
  if (features.rows() > 0 && features.cols() != xyz.cols()) {
    throw std::invalid_argument("set abstraction: feature count does not match point count");
  }
}

}  // namespace

std::vector<int> farthest_point_sampling(const Matrix3Xf& xyz, const MatrixXf& features, int count) {
  check_inputs(xyz, features);
  const int n = static_cast<int>(xyz.cols());
  if (count < 0 || count > n) {
    throw std::invalid_argument("farthest_point_sampling: cannot select " + std::to_string(count) +
                                " of " + std::to_string(n) + " points");
  }
  std::vector<int> picked;
  if (count == 0) return picked;
  picked.reserve(count);

  const Eigen::Vector3f center = 0.5f * (xyz.rowwise().minCoeff() + xyz.rowwise().maxCoeff());
  // Candidate a beats b if its score is larger, or equal with a smaller key.
  auto better = [&](int a, float da, int b, float db, bool prefer_large) {
    if (da != db) return prefer_large ? da > db : da < db;
    const int c = compare_keys(xyz, features, a, b);
    return c != 0 ? c < 0 : a < b;
  };

  std::vector<float> dist(n);
  for (int i = 0; i < n; ++i) dist[i] = squared_distance(xyz, i, center);
  int start = 0;
  for (int i = 1; i < n; ++i) {
    if (better(i, dist[i], start, dist[start], false)) start = i;
  }

  std::vector<char> taken(n, 0);
  int current = start;
  for (int k = 0; k < count; ++k) {
    picked.push_back(current);
    taken[current] = 1;
    if (k + 1 == count) break;
    const Eigen::Vector3f p = xyz.col(current);
    int next = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const float d = squared_distance(xyz, i, p);
      if (k == 0 || d < dist[i]) dist[i] = d;
      if (next < 0 || better(i, dist[i], next, dist[next], true)) next = i;
    }
    current = next;
  }
  work::add(static_cast<double>(n) * count * work::Cost::kVectorEntry);
  return picked;
}

Grouping group_neighbors(const Matrix3Xf& xyz, const MatrixXf& features, const std::vector<int>& centers,
                         float radius, int max_neighbors) {
  check_inputs(xyz, features);
  if (max_neighbors < 1) throw std::invalid_argument("group_neighbors: max_neighbors must be >= 1");
  const int n = static_cast<int>(xyz.cols());
  const float r2 = radius * radius;
  Grouping g;
  g.centers = centers;
  g.offsets.push_back(0);
  std::vector<std::pair<float, int>> candidates;
  for (int c : centers) {
    const Eigen::Vector3f p = xyz.col(c);
    candidates.clear();
    for (int i = 0; i < n; ++i) {
      const float d = squared_distance(xyz, i, p);
      if (d <= r2) candidates.emplace_back(d, i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      const int k = compare_keys(xyz, features, a.second, b.second);
      return k != 0 ? k < 0 : a.second < b.second;
    });
    int kept = 0;
    int last = -1;
    for (const auto& [d, i] : candidates) {
      if (kept == max_neighbors) break;
      if (last >= 0 && compare_keys(xyz, features, last, i) == 0) continue;
      g.source.push_back(i);
      last = i;
      ++kept;
    }
    g.offsets.push_back(static_cast<int>(g.source.size()));
  }
  work::add(static_cast<double>(n) * centers.size() * work::Cost::kVectorEntry);
  return g;
}

SaOutput sa_stage(const Matrix3Xf& xyz, const MatrixXf& features, const SaStageSpec& spec,
                  std::span<const LayerView> mlp, float slope, int max_neighbors, SaTape* tape) {
  check_inputs(xyz, features);
  if (xyz.cols() < spec.centers) {
    throw std::invalid_argument("sa_stage: " + std::to_string(xyz.cols()) + " input points for " +
                                std::to_string(spec.centers) + " centers");
  }
  if (mlp.empty()) throw std::invalid_argument("sa_stage: empty MLP");
  const int channels = static_cast<int>(features.rows());
  const std::vector<int> centers = farthest_point_sampling(xyz, features, spec.centers);
  Grouping grouping = group_neighbors(xyz, features, centers, spec.radius, max_neighbors);

  const int cols = grouping.column_count();
  MatrixXf x(3 + channels, cols);
  for (int c = 0; c < grouping.group_count(); ++c) {
    const Eigen::Vector3f p = xyz.col(centers[c]);
    for (int k = grouping.offsets[c]; k < grouping.offsets[c + 1]; ++k) {
      const int s = grouping.source[k];
      x.block<3, 1>(0, k) = xyz.col(s) - p;
      if (channels > 0) x.block(3, k, channels, 1) = features.col(s);
    }
  }

  if (tape) {
    tape->input_points = static_cast<int>(xyz.cols());
    tape->input_channels = channels;
    tape->inputs.clear();
    tape->pre.clear();
  }
  for (const auto& layer : mlp) {
    MatrixXf y = dense_forward(layer, x);
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->pre.push_back(y);
    }
    x = y.unaryExpr([slope](float v) { return leaky_relu(v, slope); });
  }

  SaOutput out;
  out.xyz.resize(3, grouping.group_count());
  out.features.resize(x.rows(), grouping.group_count());
  Eigen::MatrixXi argmax(x.rows(), grouping.group_count());
  for (int c = 0; c < grouping.group_count(); ++c) {
    out.xyz.col(c) = xyz.col(centers[c]);
    for (Eigen::Index ch = 0; ch < x.rows(); ++ch) {
      int best = grouping.offsets[c];
      for (int k = best + 1; k < grouping.offsets[c + 1]; ++k) {
        if (x(ch, k) > x(ch, best)) best = k;
      }
      argmax(ch, c) = best;
      out.features(ch, c) = x(ch, best);
    }
  }
  if (tape) {
    tape->grouping = std::move(grouping);
    tape->argmax = std::move(argmax);
  }
  return out;
}

MatrixXf dense_backward(const LayerView& layer, const MatrixXf& x, const MatrixXf& dy, float* grad,
                        bool input_gradient) {
  Eigen::Map<MatrixXf> dw(grad, layer.out, layer.in);
  Eigen::Map<VectorXf> db(grad + static_cast<std::ptrdiff_t>(layer.out) * layer.in, layer.out);
  dw.noalias() += dy * x.transpose();
  db += dy.rowwise().sum();
  const double macs = static_cast<double>(layer.in) * layer.out * x.cols();
  work::add((input_gradient ? 2.0 : 1.0) * macs * work::Cost::kFloatMac);
  if (!input_gradient) return {};
  return layer.weight().transpose() * dy;
}

MatrixXf sa_stage_backward(const SaTape& tape, const MatrixXf& d_pooled, std::span<const LayerView> mlp,
                           float slope, std::span<float* const> layer_grads, bool input_gradient) {
  if (tape.inputs.size() != mlp.size() || layer_grads.size() != mlp.size()) {
    throw std::logic_error("sa_stage_backward: tape does not match the MLP");
  }
  const auto& g = tape.grouping;
  const MatrixXf& last_pre = tape.pre.back();
  check_shape(d_pooled, last_pre.rows(), g.group_count(), "sa_stage_backward");

  MatrixXf da = MatrixXf::Zero(last_pre.rows(), last_pre.cols());
  for (int c = 0; c < g.group_count(); ++c) {
    for (Eigen::Index ch = 0; ch < da.rows(); ++ch) da(ch, tape.argmax(ch, c)) += d_pooled(ch, c);
  }
  for (std::size_t l = mlp.size(); l-- > 0;) {
    const MatrixXf& y = tape.pre[l];
    const MatrixXf dy = da.binaryExpr(y, [slope](float d, float v) { return d * leaky_relu_grad(v, slope); });
    const bool need_dx = l > 0 || (input_gradient && tape.input_channels > 0);
    da = dense_backward(mlp[l], tape.inputs[l], dy, layer_grads[l], need_dx);
  }
  if (!input_gradient) return {};
  MatrixXf d_features = MatrixXf::Zero(tape.input_channels, tape.input_points);
  if (tape.input_channels == 0) return d_features;
  for (int k = 0; k < g.column_count(); ++k) {
    d_features.col(g.source[k]) += da.block(3, k, tape.input_channels, 1);
  }
  return d_features;
}

}  // namespace nicp::neural
