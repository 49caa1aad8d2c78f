#include "ssm/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "ssm/core.hpp"
#include "ssm/format.hpp"

namespace ssm {

const char* loss_name(LossKind kind) {
  return kind == LossKind::kSoftmax ? "softmax" : "sparse";
}

namespace {

LossResult sample_loss(const std::vector<double>& logits, std::size_t target, LossKind loss,
                       std::size_t k, bool force_include_target) {
  const LogitVector z(logits);
  if (loss == LossKind::kSoftmax) return ce_loss(z, target);
  return sparse_ce_loss(z, target, k, force_include_target);
}

std::mt19937_64 shuffle_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedu};
  return std::mt19937_64(seq);
}

void validate(const Model& model, const SyntheticDataset& data, const TrainConfig& config) {
  if (model.n_classes() != data.n_classes()) {
    throw std::invalid_argument("model output size does not match dataset class count");
  }
  if (model.config().input_dim != data.feature_dim()) {
    throw std::invalid_argument("model input size does not match dataset feature size");
  }
  if (config.epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (config.loss == LossKind::kSparse && config.k == 0) throw std::invalid_argument("k must be >= 1");
  if (data.train.rows() == 0) throw std::invalid_argument("empty training split");
}

}  // namespace

Model make_model(const SyntheticDataset& data, ModelKind kind, std::size_t hidden,
                 std::uint64_t seed) {
  return Model(ModelConfig{kind, data.feature_dim(), data.n_classes(), hidden}, seed);
}

TrainResult train(Model model, const SyntheticDataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(model, data, config);
  const auto start = std::chrono::steady_clock::now();
  const Split& split = data.train;
  const std::size_t n = model.n_classes();

  auto optimizer = make_optimizer(config.optimizer, model.parameter_count());
  auto rng = shuffle_rng(config.seed);
  std::vector<std::size_t> order(split.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> grad(model.parameter_count());
  std::vector<double> logits(n);
  ForwardCache cache;

  TrainResult result{std::move(model), {}, false};
  Model& m = result.model;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        m.forward(split.row(i), logits, cache);
        if (!std::all_of(logits.begin(), logits.end(), [](double v) { return std::isfinite(v); })) {
          result.diverged = true;
          return result;
        }
        const LossResult lr =
            sample_loss(logits, split.labels[i], config.loss, config.k, config.force_include_target);
        batch_loss += lr.loss;
        m.backward(split.row(i), lr.gradient, cache, grad);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (double& g : grad) g *= scale;
      optimizer->step(m.parameters(), grad);
      loss_sum += batch_loss * scale;
      ++batches;
    }

    ExperimentRecord rec;
    rec.epoch = epoch;
    rec.mean_train_loss = loss_sum / static_cast<double>(batches);
    if (!std::isfinite(rec.mean_train_loss)) {
      result.diverged = true;
      return result;
    }
    const F1Scores f1 = evaluate(m, data.dev.rows() ? data.dev : data.train);
    rec.eval_macro_f1 = f1.macro;
    rec.eval_micro_f1 = f1.micro;
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.records.push_back(rec);
    if (on_epoch) on_epoch(m, rec);
  }
  return result;
}

F1Scores evaluate(const Model& model, const Split& split) {
  if (split.rows() == 0) throw std::invalid_argument("evaluate: empty split");
  std::vector<double> logits(model.n_classes());
  std::vector<std::size_t> predictions(split.rows());
  ForwardCache cache;
  for (std::size_t i = 0; i < split.rows(); ++i) {
    model.forward(split.row(i), logits, cache);
    predictions[i] = argmax(logits);
  }
  return f1_scores(split.labels, predictions, model.n_classes());
}

double mean_loss(const Model& model, const Split& split, LossKind loss, std::size_t k,
                 bool force_include_target) {
  if (split.rows() == 0) throw std::invalid_argument("mean_loss: empty split");
  std::vector<double> logits(model.n_classes());
  ForwardCache cache;
  double sum = 0.0;
  for (std::size_t i = 0; i < split.rows(); ++i) {
    model.forward(split.row(i), logits, cache);
    sum += sample_loss(logits, split.labels[i], loss, k, force_include_target).loss;
  }
  return sum / static_cast<double>(split.rows());
}

std::vector<SweepRow> sweep_k(const SyntheticDataset& data, const TrainConfig& base,
                              std::vector<std::size_t> k_grid, const SweepOptions& opts) {
  if (k_grid.empty()) throw std::invalid_argument("sweep_k: empty k grid");
  if (std::find(k_grid.begin(), k_grid.end(), std::size_t{0}) != k_grid.end()) {
    throw std::invalid_argument("sweep_k: k must be >= 1");
  }
  std::sort(k_grid.begin(), k_grid.end());
  k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());

  std::vector<SweepRow> rows(k_grid.size() + 1);
  rows[0].loss = LossKind::kSoftmax;
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    rows[i + 1].loss = LossKind::kSparse;
    rows[i + 1].k = k_grid[i];
  }

  const Model initial = make_model(data, opts.model, opts.hidden, base.seed);
  auto run_row = [&](SweepRow& row) {
    TrainConfig cfg = base;
    cfg.loss = row.loss;
    if (row.loss == LossKind::kSparse) cfg.k = row.k;
    TrainResult r = train(initial, data, cfg);
    row.diverged = r.diverged;
    row.records = std::move(r.records);
    row.final_train_loss = row.records.empty() ? NAN : row.records.back().mean_train_loss;
    if (!row.diverged) row.test = evaluate(r.model, data.test.rows() ? data.test : data.train);
  };

  std::size_t threads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, rows.size());
  if (threads == 1) {
    for (SweepRow& row : rows) run_row(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_row(rows[i]);
      });
    }
  }
  return rows;
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ExperimentRecord>& records, bool include_wall_time) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kRecordsCsvHeader << '\n';
  for (const ExperimentRecord& r : records) {
    out << r.epoch << ',' << format_double(r.mean_train_loss) << ','
        << format_double(r.eval_macro_f1) << ',' << format_double(r.eval_micro_f1) << ','
        << format_double(include_wall_time ? r.wall_time_s : 0.0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string run_file_name(LossKind loss, std::size_t k, std::uint64_t seed) {
  return std::string(loss_name(loss)) + "_k" + std::to_string(loss == LossKind::kSparse ? k : 0) +
         "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace ssm
