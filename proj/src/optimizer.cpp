#include "ssm/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ssm {

void Sgd::step(std::span<double> params, std::span<const double> grad) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
}

Adam::Adam(std::size_t n_params, const OptimizerConfig& config)
    : config_(config), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::size_t n_params) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (config.kind == OptimizerKind::kSgd) return std::make_unique<Sgd>(config.lr);
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(config.eps > 0.0)) throw std::invalid_argument("Adam eps must be > 0");
  return std::make_unique<Adam>(n_params, config);
}

}  // namespace ssm
