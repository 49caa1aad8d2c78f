#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ssm {

/// Counts indexed [reference][prediction].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes);

  void add(std::size_t reference, std::size_t prediction);
  void merge(const ConfusionMatrix& other);

  std::size_t n_classes() const noexcept { return n_; }
  std::size_t total() const noexcept { return total_; }
  std::size_t at(std::size_t reference, std::size_t prediction) const {
    return counts_[reference * n_ + prediction];
  }

  std::size_t true_positives(std::size_t c) const { return at(c, c); }
  std::size_t false_positives(std::size_t c) const;
  std::size_t false_negatives(std::size_t c) const;

  /// 2TP / (2TP + FP + FN); 0 for a class that never occurs in either
  /// references or predictions.
  double f1(std::size_t c) const;
  double macro_f1() const;
  /// From pooled counts. Equal to accuracy for single-label data.
  double micro_f1() const;
  double accuracy() const;

 private:
  std::size_t n_;
  std::size_t total_ = 0;
  std::vector<std::size_t> counts_;
};

struct F1Scores {
  double macro = 0.0;
  double micro = 0.0;
};

/// Throws std::invalid_argument on empty or mismatched inputs and
/// std::out_of_range on labels outside [0, n_classes).
F1Scores f1_scores(std::span<const std::size_t> references,
                   std::span<const std::size_t> predictions, std::size_t n_classes);

}  // namespace ssm
