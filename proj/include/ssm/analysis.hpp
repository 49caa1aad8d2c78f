#pragma once

// Margin analysis for the cross-entropy loss.
//
// For a correctly classified sample (target = argmax) over n categories,
// CE <= epsilon forces z_max - z_min >= log(n-1) - log(e^epsilon - 1).
// This module evaluates that bound and checks it empirically by sampling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssm::analysis {

/// log(n-1) - log(e^epsilon - 1). Negative values (vacuous bound) are
/// returned as-is. Throws std::invalid_argument for epsilon <= 0 or n < 2.
double required_spread(double epsilon, std::size_t n);

/// Bound for the sparse loss restricted to k categories. k == 1 gives 0:
/// the loss is identically zero when the target is the unique support member.
double required_spread_sparse(double epsilon, std::size_t k);

struct MarginBound {
  double epsilon = 0.0;
  std::size_t n = 0;
  double required_spread = 0.0;
};

enum class SampleFamily { kUniform1, kUniform10, kGaussian1, kGaussian5, kNearBoundary };

inline constexpr std::size_t kNumFamilies = 5;
inline constexpr double kSpreadTolerance = 1e-9;

const char* family_name(SampleFamily f);

struct VerifyOptions {
  std::size_t n = 10;
  double epsilon = 0.6931471805599453;
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  /// When set, verify the sparse loss at this k: the spread is measured over
  /// the top-k sub-vector and the bound uses k in place of n.
  std::optional<std::size_t> sparse_k;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t threads = 0;
};

struct VerificationReport {
  std::size_t n = 0;
  double epsilon = 0.0;
  std::size_t trials = 0;
  std::optional<std::size_t> sparse_k;
  double bound = 0.0;
  std::size_t counterexamples = 0;
  std::size_t passing = 0;  // samples with loss <= epsilon
  /// +inf when no sample passed.
  double min_passing_spread = 0.0;

  bool ok() const noexcept { return counterexamples == 0; }
};

/// Draws the logit vector for one trial. The stream depends only on
/// (seed, trial), and the family cycles with the trial index.
std::vector<double> sample_logits(std::size_t n, double bound, std::uint64_t seed,
                                  std::size_t trial);

/// Samples `trials` logit vectors and counts those with loss <= epsilon but
/// spread < bound - kSpreadTolerance. Result does not depend on `threads`.
VerificationReport verify_necessary_condition(const VerifyOptions& opts);

std::string report_csv_header();
std::string report_csv_row(const VerificationReport& r);
std::string report_text(const VerificationReport& r);

/// A vector whose top-k sub-vector clears the sparse bound by `margin`
/// while the full vector does not clear the full bound. Target is index 0.
struct SparseContrast {
  std::size_t n = 0;
  std::size_t k = 0;
  double spread = 0.0;
  double sparse_loss = 0.0;
  double full_loss = 0.0;
};

SparseContrast sparse_contrast(std::size_t n, std::size_t k, double epsilon, double margin);

}  // namespace ssm::analysis
