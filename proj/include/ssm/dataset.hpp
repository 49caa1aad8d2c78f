#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ssm {

/// Row-major feature matrix with one label per row.
struct Split {
  std::size_t feature_dim = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * feature_dim, feature_dim);
  }
};

struct DatasetConfig {
  std::size_t n_classes = 150;
  std::size_t feature_dim = 64;
  std::size_t samples_per_class = 40;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian-mixture classification data: one unit-scale centroid per class,
/// points at centroid + noise_scale * N(0, I). Each class is split 8:1:1 into
/// train/dev/test (dev and test get floor(samples_per_class / 10) each).
struct SyntheticDataset {
  DatasetConfig config;
  Split train;
  Split dev;
  Split test;

  std::size_t n_classes() const noexcept { return config.n_classes; }
  std::size_t feature_dim() const noexcept { return config.feature_dim; }
};

/// Deterministic in `config`. Throws std::invalid_argument on n_classes < 2,
/// zero sizes or negative noise.
SyntheticDataset generate_dataset(const DatasetConfig& config);

/// Text snapshot: key=value header, a "---" line, then one
/// "split,label,x0,...,x{D-1}" row per sample. Doubles use shortest
/// round-trip notation, so read(write(d)) == d exactly.
void write_dataset(const SyntheticDataset& data, const std::filesystem::path& path);
SyntheticDataset read_dataset(const std::filesystem::path& path);

bool operator==(const Split& a, const Split& b);
bool operator==(const SyntheticDataset& a, const SyntheticDataset& b);

}  // namespace ssm
