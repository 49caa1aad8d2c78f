#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ssm {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update to `params` in place.
  virtual void step(std::span<double> params, std::span<const double> grad) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<double> params, std::span<const double> grad) override;

 private:
  double lr_;
};

/// Adam with bias-corrected moments.
class Adam final : public Optimizer {
 public:
  Adam(std::size_t n_params, const OptimizerConfig& config);
  void step(std::span<double> params, std::span<const double> grad) override;

 private:
  OptimizerConfig config_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

/// Throws std::invalid_argument unless lr > 0, 0 <= beta < 1 and eps > 0.
std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::size_t n_params);

}  // namespace ssm
