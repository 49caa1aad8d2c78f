#include "ssm/metrics.hpp"

#include <stdexcept>
#include <string>

namespace ssm {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_(n_classes), counts_(n_classes * n_classes, 0) {
  if (n_classes == 0) throw std::invalid_argument("ConfusionMatrix: no classes");
}

void ConfusionMatrix::add(std::size_t reference, std::size_t prediction) {
  if (reference >= n_ || prediction >= n_) {
    throw std::out_of_range("ConfusionMatrix: class index out of range");
  }
  ++counts_[reference * n_ + prediction];
  ++total_;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw std::invalid_argument("ConfusionMatrix: size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

std::size_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::size_t fp = 0;
  for (std::size_t r = 0; r < n_; ++r) {
    if (r != c) fp += at(r, c);
  }
  return fp;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::size_t fn = 0;
  for (std::size_t p = 0; p < n_; ++p) {
    if (p != c) fn += at(c, p);
  }
  return fn;
}

double ConfusionMatrix::f1(std::size_t c) const {
  const double tp = static_cast<double>(true_positives(c));
  const double denom = 2.0 * tp + static_cast<double>(false_positives(c) + false_negatives(c));
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

double ConfusionMatrix::macro_f1() const {
  double sum = 0.0;
  for (std::size_t c = 0; c < n_; ++c) sum += f1(c);
  return sum / static_cast<double>(n_);
}

double ConfusionMatrix::micro_f1() const {
  std::size_t tp = 0;
  for (std::size_t c = 0; c < n_; ++c) tp += true_positives(c);
  // Every miss is one FP (for the predicted class) and one FN (for the
  // reference class).
  const std::size_t miss = total_ - tp;
  const double denom = 2.0 * static_cast<double>(tp) + 2.0 * static_cast<double>(miss);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

double ConfusionMatrix::accuracy() const {
  std::size_t tp = 0;
  for (std::size_t c = 0; c < n_; ++c) tp += true_positives(c);
  return total_ == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_);
}

F1Scores f1_scores(std::span<const std::size_t> references,
                   std::span<const std::size_t> predictions, std::size_t n_classes) {
  if (references.empty()) throw std::invalid_argument("f1_scores: empty input");
  if (references.size() != predictions.size()) {
    throw std::invalid_argument("f1_scores: " + std::to_string(references.size()) +
                                " references vs " + std::to_string(predictions.size()) +
                                " predictions");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < references.size(); ++i) cm.add(references[i], predictions[i]);
  return {cm.macro_f1(), cm.micro_f1()};
}

}  // namespace ssm
