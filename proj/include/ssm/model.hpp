#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssm {

enum class ModelKind { kLinear, kMlp };

struct ModelConfig {
  ModelKind kind = ModelKind::kLinear;
  std::size_t input_dim = 0;
  std::size_t n_classes = 0;
  std::size_t hidden = 0;  // MLP only
};

/// Per-sample scratch kept between forward and backward.
struct ForwardCache {
  std::vector<double> hidden;  // tanh activations, MLP only
};

/// Linear classifier (W x + b) or one-hidden-layer tanh MLP. All parameters
/// live in one flat vector:
///   linear: W[n_classes x input_dim], b[n_classes]
///   mlp:    W1[hidden x input_dim], b1[hidden], W2[n_classes x hidden], b2[n_classes]
/// Weights start as N(0, 1/fan_in) draws from `seed`, biases at zero.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t n_classes() const noexcept { return config_.n_classes; }

  static std::size_t parameter_count(const ModelConfig& config);
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  void forward(std::span<const double> x, std::span<double> logits, ForwardCache& cache) const;

  /// Adds d loss / d params for one sample to `grad`, given d loss / d logits.
  void backward(std::span<const double> x, std::span<const double> dlogits,
                const ForwardCache& cache, std::span<double> grad) const;

 private:
  ModelConfig config_;
  std::vector<double> params_;
};

}  // namespace ssm
