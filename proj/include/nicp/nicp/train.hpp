#pragma once

#include <functional>
#include <vector>

#include "nicp/neural/adamw.hpp"
#include "nicp/nicp/track.hpp"

namespace nicp::tracking {

struct TrainingFrame {
  int id = 0;
  PointCloud sparse;  // P, world frame
  PointCloud dense;   // P-bar, world frame
  BodyPose pose;
};

struct TrainConfig {
  int epochs = 10;
  neural::AdamWConfig adamw;
  int loss_samples = 4096;          // dense points per loss evaluation
  std::uint64_t seed = 0;           // shuffling and subsampling
  double divergence_factor = 10.0;  // abort when an epoch loss exceeds this times the first
  std::function<void(int epoch, double loss)> on_epoch;
};

// Per-frame training loss L = (1/N) sum_i [mean_p ||C(p, D(theta_i)) - p||^2
// + lambda L_reg(theta_i)] over the dense cloud, i = 1..N, with its gradient
// with respect to each network output.
struct UnrolledLoss {
  double loss = 0.0;
  std::vector<double> iteration_loss;          // one per unrolled iteration
  std::vector<neural::Tape> tapes;             // forward records, one per iteration
  std::vector<neural::VectorXf> output_grads;  // dL / d(delta theta_j)
};

UnrolledLoss unrolled_loss(const neural::UpdateNetwork& network, const TrainingFrame& frame,
                           std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                           int loss_samples, std::uint64_t seed, bool record = true);

// Network parameter gradient of unrolled_loss (correspondences and the
// network inputs r, g held constant).
neural::VectorXf loss_gradient(const neural::UpdateNetwork& network, const UnrolledLoss& loss);

struct TrainReport {
  std::vector<double> epoch_loss;
};

// AdamW with batch size 1 over seeded per-epoch shuffles. Throws
// std::runtime_error when training diverges.
TrainReport train(neural::UpdateNetwork& network, const std::vector<TrainingFrame>& frames,
                  std::shared_ptr<const DeformationModel> model, const NicpConfig& config,
                  const TrainConfig& train_config);

}  // namespace nicp::tracking
