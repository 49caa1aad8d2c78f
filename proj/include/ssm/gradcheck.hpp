#pragma once

// Central finite-difference checks of the closed-form loss gradients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ssm {

using ScalarFn = std::function<double(const std::vector<double>&)>;

/// (f(z + h e_i) - f(z - h e_i)) / 2h for every i.
std::vector<double> central_difference(const ScalarFn& f, std::span<const double> z, double h);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|); 0 when both are zero.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-5;
inline constexpr double kMinTopKGap = 1e-3;

struct GradCheckOptions {
  std::size_t dim = 50;
  /// 0 draws k uniformly from [1, dim] per trial.
  std::size_t k = 0;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  bool force_include_target = false;
  double h = kFiniteDifferenceStep;
};

struct GradCheckReport {
  std::size_t trials = 0;
  std::size_t rejected = 0;  // draws discarded for a top-k gap below kMinTopKGap
  double max_error_ce = 0.0;
  double max_error_sparse = 0.0;
  double max_zero_sum_ce = 0.0;

  double max_error() const noexcept;
  bool ok(double tolerance = kGradientTolerance) const noexcept;
};

/// Draws N(0, 3^2) logits with a uniform target, redrawing whenever the
/// support boundary is within kMinTopKGap, until `trials` samples are kept.
GradCheckReport run_grad_check(const GradCheckOptions& opts);

std::string grad_check_text(const GradCheckOptions& opts, const GradCheckReport& r);

}  // namespace ssm
