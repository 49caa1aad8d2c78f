#include "ssm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace ssm {

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw std::invalid_argument("LogitVector: need at least one category");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("LogitVector: non-finite entry at index " +
                                  std::to_string(i));
    }
  }
}

LogitVector::LogitVector(std::initializer_list<double> values)
    : LogitVector(std::vector<double>(values)) {}

bool SupportSet::contains(std::size_t i) const noexcept {
  return std::find(indices.begin(), indices.end(), i) != indices.end();
}

namespace {

// Strict total order: larger logit first, then lower index.
struct RankOrder {
  std::span<const double> z;
  bool operator()(std::size_t a, std::size_t b) const noexcept {
    if (z[a] != z[b]) return z[a] > z[b];
    return a < b;
  }
};

std::vector<std::size_t> ascending(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  return indices;
}

// Writes exp(z_i - m) / sum over `indices` into `out` (which must already be
// zero elsewhere). Summation runs in the order of `indices`.
void normalize_over(std::span<const double> z, std::span<const std::size_t> indices,
                    std::span<double> out) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i : indices) m = std::max(m, z[i]);
  double sum = 0.0;
  for (std::size_t i : indices) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (std::size_t i : indices) out[i] /= sum;
}

std::vector<std::size_t> all_indices(std::size_t d) {
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void check_k(std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
}

void check_target(std::size_t t, std::size_t d) {
  if (t >= d) {
    throw std::out_of_range("target " + std::to_string(t) + " outside [0, " +
                            std::to_string(d) + ")");
  }
}

}  // namespace

std::size_t argmax(std::span<const double> z) {
  // max_element returns the first of equal maxima.
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

SupportSet top_k(const LogitVector& z, std::size_t k) {
  check_k(k);
  const std::size_t d = z.size();
  const std::size_t k_eff = std::min(k, d);
  const RankOrder order{z.values()};

  std::vector<std::size_t> idx = all_indices(d);
  double gap = std::numeric_limits<double>::infinity();
  if (k_eff < d) {
    std::nth_element(idx.begin(), idx.begin() + k_eff, idx.end(), order);
    std::sort(idx.begin(), idx.begin() + k_eff, order);
    gap = z[idx[k_eff - 1]] - z[idx[k_eff]];
    idx.resize(k_eff);
  } else {
    std::sort(idx.begin(), idx.end(), order);
  }
  return SupportSet{std::move(idx), k, gap};
}

namespace {

// Splits log sum exp(z_i) into m + log1p(rest), with m the largest term.
std::pair<double, double> lse_parts(std::span<const double> z, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("log_sum_exp: empty index set");
  std::size_t top = indices.front();
  for (std::size_t i : indices) {
    if (z[i] > z[top]) top = i;
  }
  const double m = z[top];
  double rest = 0.0;
  for (std::size_t i : indices) {
    if (i != top) rest += std::exp(z[i] - m);
  }
  return {m, std::log1p(rest)};
}

// Adds (m - z_t) before the log1p term: when t is the max the loss is the
// log1p term alone, with no cancellation against m.
double nll_over(std::span<const double> z, std::span<const std::size_t> indices, std::size_t t) {
  const auto [m, tail] = lse_parts(z, indices);
  return (m - z[t]) + tail;
}

}  // namespace

double log_sum_exp(std::span<const double> z, std::span<const std::size_t> indices) {
  // Pulling the maximum out as the leading 1 keeps small remainders at full
  // relative precision through log1p.
  const auto [m, tail] = lse_parts(z, indices);
  return m + tail;
}

double log_sum_exp(std::span<const double> z) {
  const auto idx = all_indices(z.size());
  return log_sum_exp(z, idx);
}

ProbabilityDistribution softmax(const LogitVector& z) {
  ProbabilityDistribution p;
  p.values.assign(z.size(), 0.0);
  p.support = all_indices(z.size());
  normalize_over(z.values(), p.support, p.values);
  return p;
}

ProbabilityDistribution sparse_softmax(const LogitVector& z, std::size_t k) {
  ProbabilityDistribution p;
  p.values.assign(z.size(), 0.0);
  p.support = ascending(top_k(z, k).indices);
  normalize_over(z.values(), p.support, p.values);
  return p;
}

LossResult ce_loss(const LogitVector& z, std::size_t t) {
  check_target(t, z.size());
  const auto idx = all_indices(z.size());
  LossResult r;
  r.loss = nll_over(z.values(), idx, t);
  r.gradient.assign(z.size(), 0.0);
  normalize_over(z.values(), idx, r.gradient);
  r.gradient[t] -= 1.0;
  return r;
}

SupportSet loss_support(const LogitVector& z, std::size_t t, std::size_t k,
                        bool force_include_target) {
  check_target(t, z.size());
  SupportSet omega = top_k(z, k);
  if (force_include_target && !omega.contains(t)) {
    // t ranks below every member, so rank order is preserved.
    omega.indices.back() = t;
  }
  return omega;
}

LossResult sparse_ce_loss(const LogitVector& z, std::size_t t, std::size_t k,
                          bool force_include_target) {
  check_k(k);
  const auto support = ascending(loss_support(z, t, k, force_include_target).indices);
  LossResult r;
  r.loss = nll_over(z.values(), support, t);
  r.gradient.assign(z.size(), 0.0);
  normalize_over(z.values(), support, r.gradient);
  r.gradient[t] -= 1.0;
  return r;
}

}  // namespace ssm
