#pragma once

#include <cstdint>

#include "nicp/neural/network.hpp"

namespace nicp::neural {

struct AdamWConfig {
  float lr = 1e-5f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 1e-2f;
};

// Adam with decoupled weight decay: p <- p (1 - lr wd), then the
// bias-corrected Adam step.
class AdamW {
 public:
  AdamW(std::size_t parameter_count, AdamWConfig config = {});

  const AdamWConfig& config() const { return config_; }
  void set_lr(float lr) { config_.lr = lr; }
  std::int64_t step_count() const { return t_; }

  void step(Eigen::Ref<VectorXf> parameters, const VectorXf& gradient);
  void step(UpdateNetwork& network, const VectorXf& gradient);

 private:
  AdamWConfig config_;
  VectorXf m_;
  VectorXf v_;
  std::int64_t t_ = 0;
};

}  // namespace nicp::neural
