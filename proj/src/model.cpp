#include "ssm/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ssm {

namespace {

// y[r] = b[r] + sum_c W[r, c] x[c]
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double* row = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// dW += dy x^T, db += dy
void affine_grad(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                 std::span<double> db) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < dy.size(); ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    double* row = dw.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += g * x[c];
    db[r] += g;
  }
}

}  // namespace

std::size_t Model::parameter_count(const ModelConfig& c) {
  if (c.kind == ModelKind::kLinear) return c.n_classes * c.input_dim + c.n_classes;
  return c.hidden * c.input_dim + c.hidden + c.n_classes * c.hidden + c.n_classes;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config.input_dim == 0 || config.n_classes == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (config.kind == ModelKind::kMlp && config.hidden == 0) {
    throw std::invalid_argument("MLP needs a positive hidden width");
  }
  params_.assign(parameter_count(config), 0.0);

  // Salted so a model and a dataset built from the same seed draw
  // unrelated streams.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x1417u};
  std::mt19937_64 rng(seq);
  auto init = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = g(rng);
  };
  const std::size_t d = config.input_dim, n = config.n_classes, h = config.hidden;
  if (config.kind == ModelKind::kLinear) {
    init(0, n * d, d);
  } else {
    init(0, h * d, d);
    init(h * d + h, n * h, h);
  }
}

void Model::forward(std::span<const double> x, std::span<double> logits,
                    ForwardCache& cache) const {
  const std::size_t d = config_.input_dim, n = config_.n_classes, h = config_.hidden;
  std::span<const double> p = params_;
  if (config_.kind == ModelKind::kLinear) {
    affine(p.subspan(0, n * d), p.subspan(n * d, n), x, logits);
    return;
  }
  cache.hidden.resize(h);
  affine(p.subspan(0, h * d), p.subspan(h * d, h), x, cache.hidden);
  for (double& a : cache.hidden) a = std::tanh(a);
  const std::size_t off = h * d + h;
  affine(p.subspan(off, n * h), p.subspan(off + n * h, n), cache.hidden, logits);
}

void Model::backward(std::span<const double> x, std::span<const double> dlogits,
                     const ForwardCache& cache, std::span<double> grad) const {
  const std::size_t d = config_.input_dim, n = config_.n_classes, h = config_.hidden;
  if (config_.kind == ModelKind::kLinear) {
    affine_grad(x, dlogits, grad.subspan(0, n * d), grad.subspan(n * d, n));
    return;
  }
  const std::size_t off = h * d + h;
  affine_grad(cache.hidden, dlogits, grad.subspan(off, n * h), grad.subspan(off + n * h, n));

  // Back through W2 and tanh.
  std::vector<double> dhidden(h, 0.0);
  const double* w2 = params_.data() + off;
  for (std::size_t r = 0; r < n; ++r) {
    const double g = dlogits[r];
    if (g == 0.0) continue;
    for (std::size_t c = 0; c < h; ++c) dhidden[c] += g * w2[r * h + c];
  }
  for (std::size_t c = 0; c < h; ++c) {
    const double a = cache.hidden[c];
    dhidden[c] *= 1.0 - a * a;
  }
  affine_grad(x, dhidden, grad.subspan(0, h * d), grad.subspan(h * d, h));
}

}  // namespace ssm
