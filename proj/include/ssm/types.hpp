#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ssm {

/// Raw, finite scores over d >= 1 categories.
class LogitVector {
 public:
  /// Throws std::invalid_argument if `values` is empty or holds NaN/Inf.
  explicit LogitVector(std::vector<double> values);
  LogitVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Indices of the k largest logits.
///
/// `indices` is in rank order: descending logit, lower index first among
/// equal logits. `boundary_gap` is the difference between the k_eff-th and
/// (k_eff+1)-th largest logits, +inf when the support covers every category.
struct SupportSet {
  std::vector<std::size_t> indices;
  std::size_t k_requested = 0;
  double boundary_gap = 0.0;

  std::size_t size() const noexcept { return indices.size(); }
  bool contains(std::size_t i) const noexcept;
};

/// A point on the simplex. Entries outside `support` are exactly zero.
/// `support` is sorted ascending.
struct ProbabilityDistribution {
  std::vector<double> values;
  std::vector<std::size_t> support;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d z
};

}  // namespace ssm
