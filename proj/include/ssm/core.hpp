#pragma once

// Numeric kernels: top-k selection, softmax and sparse-softmax, and the two
// cross-entropy losses with their closed-form gradients.
//
// Everything here is a pure function of its arguments and is safe to call
// concurrently. All exponentials are evaluated after subtracting the maximum
// logit of the set being normalized.

#include <cstddef>
#include <span>

#include "ssm/types.hpp"

namespace ssm {

/// Selects the min(k, d) largest logits; equal logits go to the lower index.
/// Throws std::invalid_argument when k == 0.
SupportSet top_k(const LogitVector& z, std::size_t k);

/// Full-support softmax.
ProbabilityDistribution softmax(const LogitVector& z);

/// Softmax restricted to the top-k logits; every other entry is exactly 0.
/// For k >= d this is bitwise identical to softmax(z).
ProbabilityDistribution sparse_softmax(const LogitVector& z, std::size_t k);

/// log sum_{i in indices} exp(z_i). `indices` must be nonempty.
double log_sum_exp(std::span<const double> z, std::span<const std::size_t> indices);
double log_sum_exp(std::span<const double> z);

/// logsumexp(z) - z_t, gradient softmax(z) - onehot(t).
/// Throws std::out_of_range when t >= d.
LossResult ce_loss(const LogitVector& z, std::size_t t);

/// Support used by sparse_ce_loss: top_k(z, k), and when `force_include_target`
/// is set and t is not selected, t replaces the lowest-ranked member (for
/// k_eff == 1 that leaves {t}, and the loss is identically zero).
SupportSet loss_support(const LogitVector& z, std::size_t t, std::size_t k,
                        bool force_include_target);

/// log sum_{i in support} exp(z_i) - z_t.
///
/// The support is held fixed when differentiating, so the gradient is the
/// softmax over the support minus 1 at t, and zero everywhere else.
LossResult sparse_ce_loss(const LogitVector& z, std::size_t t, std::size_t k,
                          bool force_include_target = false);

/// Index of the largest logit, lowest index among ties.
std::size_t argmax(std::span<const double> z);

}  // namespace ssm
