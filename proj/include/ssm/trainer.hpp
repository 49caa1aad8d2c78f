#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ssm/dataset.hpp"
#include "ssm/metrics.hpp"
#include "ssm/model.hpp"
#include "ssm/optimizer.hpp"

namespace ssm {

enum class LossKind { kSoftmax, kSparse };

const char* loss_name(LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::kSoftmax;
  std::size_t k = 20;  // sparse only; clamped to n_classes
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool force_include_target = false;
};

struct ExperimentRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_train_loss = 0.0;
  double eval_macro_f1 = 0.0;
  double eval_micro_f1 = 0.0;
  double wall_time_s = 0.0;  // since the start of training
};

struct TrainResult {
  Model model;
  std::vector<ExperimentRecord> records;
  /// Set when an epoch's mean loss went non-finite; that epoch has no record.
  bool diverged = false;
};

/// Called after each completed epoch with the updated model.
using EpochCallback = std::function<void(const Model&, const ExperimentRecord&)>;

/// Seeded initialisation for a model matching `data`.
Model make_model(const SyntheticDataset& data, ModelKind kind, std::size_t hidden,
                 std::uint64_t seed);

/// Mini-batch training on data.train, evaluating F1 on data.dev after each
/// epoch. Shuffling is seeded from config.seed, so identical inputs give
/// identical records (wall times aside).
TrainResult train(Model model, const SyntheticDataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Argmax predictions scored against the split's labels.
F1Scores evaluate(const Model& model, const Split& split);

/// Mean per-sample loss of a fixed model over `split`.
double mean_loss(const Model& model, const Split& split, LossKind loss, std::size_t k,
                 bool force_include_target);

struct SweepRow {
  LossKind loss = LossKind::kSoftmax;
  std::size_t k = 0;  // 0 for the softmax baseline
  F1Scores test;
  double final_train_loss = 0.0;
  bool diverged = false;
  std::vector<ExperimentRecord> records;
};

struct SweepOptions {
  ModelKind model = ModelKind::kLinear;
  std::size_t hidden = 0;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t threads = 1;
};

/// Softmax baseline row first, then one sparse row per distinct k in
/// ascending order. Every row starts from the same initial model. A
/// divergent row is flagged and the sweep carries on.
std::vector<SweepRow> sweep_k(const SyntheticDataset& data, const TrainConfig& base,
                              std::vector<std::size_t> k_grid, const SweepOptions& opts = {});

inline constexpr const char* kRecordsCsvHeader =
    "epoch,mean_train_loss,macro_f1,micro_f1,wall_time_s";

/// Writes the per-epoch CSV. With `include_wall_time` false the timing
/// column is written as 0 so reruns are byte-identical.
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ExperimentRecord>& records, bool include_wall_time);

/// "<loss>_k<k>_seed<seed>.csv"; k is 0 for softmax runs.
std::string run_file_name(LossKind loss, std::size_t k, std::uint64_t seed);

}  // namespace ssm
