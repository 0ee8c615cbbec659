#include "nicp/nicp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nicp::tracking {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

UnrolledLoss unrolled_loss(const neural::UpdateNetwork& network, const TrainingFrame& frame,
                           std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                           int loss_samples, std::uint64_t seed, bool record) {
  NicpConfig input_config = config;
  input_config.seed = mix(seed, 1);
  const NicpFrame input(model, frame.sparse, frame.pose, input_config);

  // Dense supervision with the data term averaged over points: the
  // evaluator's sum loss with weight lambda * n, divided by n.
  NicpConfig dense_config = config;
  dense_config.seed = mix(seed, 2);
  dense_config.subsample = loss_samples;
  dense_config.mode = CorrespondenceMode::Euclidean;
  const PointCloud dense_sub = subsample(frame.dense, loss_samples, dense_config.seed);
  dense_config.reg_weight = config.reg_weight * static_cast<double>(dense_sub.size());
  const NicpFrame supervision(model, dense_sub, frame.pose, dense_config);
  const double inv_n = 1.0 / static_cast<double>(dense_sub.size());

  const int n_iter = config.iterations;
  UnrolledLoss out;
  out.tapes.resize(record ? n_iter : 0);
  std::vector<Eigen::VectorXd> theta_grads;
  GraphParams theta(model->graph.node_count());
  for (int i = 0; i < n_iter; ++i) {
    const auto feats = input.features(theta);
    theta.vector() += network.forward(feats.input, record ? &out.tapes[i] : nullptr).cast<double>();
    const auto& eval = supervision.evaluator();
    const auto matches = eval.correspond(theta);
    Eigen::VectorXd grad;
    const double li = eval.frozen_loss(theta, matches, record ? &grad : nullptr) * inv_n;
    out.iteration_loss.push_back(li);
    out.loss += li / n_iter;
    if (record) theta_grads.push_back(grad * (inv_n / n_iter));
  }
  if (record) {
    // Output j moves every later iterate: dL/d(delta_j) = sum_{i >= j} dL_i/dtheta_i.
    out.output_grads.resize(n_iter);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model->parameter_count()));
    for (int j = n_iter - 1; j >= 0; --j) {
      acc += theta_grads[j];
      out.output_grads[j] = acc.cast<float>();
    }
  }
  return out;
}

neural::VectorXf loss_gradient(const neural::UpdateNetwork& network, const UnrolledLoss& loss) {
  if (loss.tapes.empty() || loss.tapes.size() != loss.output_grads.size()) {
    throw std::logic_error("loss_gradient: unrolled loss was evaluated without recording");
  }
  neural::VectorXf grad;
  for (std::size_t j = 0; j < loss.tapes.size(); ++j) network.backward(loss.tapes[j], loss.output_grads[j], grad);
  return grad;
}

TrainReport train(neural::UpdateNetwork& network, const std::vector<TrainingFrame>& frames,
                  std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                  const TrainConfig& tc) {
  if (frames.empty()) throw std::invalid_argument("train: no training frames");
  if (tc.epochs < 0) throw std::invalid_argument("train: negative epoch count");
  config.validate();
  neural::AdamW optimizer(network.parameter_count(), tc.adamw);
  TrainReport report;
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::mt19937_64 rng(mix(tc.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& f = frames[idx];
      const auto loss = unrolled_loss(network, f, model, config, tc.loss_samples,
                                      mix(tc.seed, static_cast<std::uint64_t>(f.id)));
      if (!std::isfinite(loss.loss)) {
        throw std::runtime_error("train: non-finite loss on frame " + std::to_string(f.id) + " in epoch " +
                                 std::to_string(epoch));
      }
      optimizer.step(network, loss_gradient(network, loss));
      total += loss.loss;
    }
    const double mean = total / static_cast<double>(frames.size());
    report.epoch_loss.push_back(mean);
    if (tc.on_epoch) tc.on_epoch(epoch, mean);
    if (mean > tc.divergence_factor * report.epoch_loss.front()) {
      std::ostringstream msg;
      msg << "train: diverged in epoch " << epoch << " (mean loss " << mean << " vs first epoch "
          << report.epoch_loss.front() << ")";
      throw std::runtime_error(msg.str());
    }
  }
  return report;
}

}  // namespace nicp::tracking
