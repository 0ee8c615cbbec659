#include "nicp/neural/adamw.hpp"

#include <cmath>
#include <stdexcept>

#include "nicp/common/work_meter.hpp"

namespace nicp::neural {

AdamW::AdamW(std::size_t parameter_count, AdamWConfig config)
    : config_(config),
      m_(VectorXf::Zero(static_cast<Eigen::Index>(parameter_count))),
      v_(VectorXf::Zero(static_cast<Eigen::Index>(parameter_count))) {
  if (!(config_.lr >= 0.0f) || !(config_.weight_decay >= 0.0f) || !(config_.eps > 0.0f) ||
      !(config_.beta1 >= 0.0f && config_.beta1 < 1.0f) || !(config_.beta2 >= 0.0f && config_.beta2 < 1.0f)) {
    throw std::invalid_argument("AdamW: invalid hyperparameters");
  }
}

void AdamW::step(Eigen::Ref<VectorXf> parameters, const VectorXf& gradient) {
  if (parameters.size() != m_.size() || gradient.size() != m_.size()) {
    throw std::invalid_argument("AdamW::step: size mismatch");
  }
  ++t_;
  const AdamWConfig& c = config_;
  const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), static_cast<double>(t_)));
  const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), static_cast<double>(t_)));
  const float decay = 1.0f - c.lr * c.weight_decay;
  for (Eigen::Index i = 0; i < parameters.size(); ++i) {
    const float g = gradient[i];
    m_[i] = c.beta1 * m_[i] + (1.0f - c.beta1) * g;
    v_[i] = c.beta2 * v_[i] + (1.0f - c.beta2) * g * g;
    const float mhat = m_[i] / bc1;
    const float vhat = v_[i] / bc2;
    parameters[i] = parameters[i] * decay - c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
  work::add(static_cast<double>(parameters.size()) * 12.0 * work::Cost::kFloatMac);
}

void AdamW::step(UpdateNetwork& network, const VectorXf& gradient) {
  step(network.parameters(), gradient);
  network.count_step();
}

}  // namespace nicp::neural
