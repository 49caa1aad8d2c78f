#include "ssm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ssm/analysis.hpp"
#include "ssm/dataset.hpp"
#include "ssm/format.hpp"
#include "ssm/gradcheck.hpp"
#include "ssm/trainer.hpp"

namespace ssm::cli {

namespace {

namespace fs = std::filesystem;

// Exit status for a property that was checked and did not hold.
constexpr int kCheckFailed = 1;
constexpr int kUsageError = 2;

struct DataFlags {
  std::size_t n_classes = 150;
  std::size_t feature_dim = 64;
  std::size_t samples_per_class = 40;
  double noise = 1.0;
  std::uint64_t seed = 0;

  DatasetConfig config() const {
    return {n_classes, feature_dim, samples_per_class, noise, seed};
  }
};

struct TrainFlags {
  std::string loss = "softmax";
  std::size_t k = 20;
  std::vector<std::size_t> k_grid{1, 10, 20, 50, 100};
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  std::string optimizer = "adam";
  double lr = 1e-3;
  bool force_include_target = false;
  bool fail_on_divergence = false;
  bool record_wall_time = false;
  std::string model = "linear";
  std::size_t hidden = 64;
  std::size_t threads = 1;
  std::string out = "results";
};

struct VerifyFlags {
  std::size_t n = 10;
  double epsilon = 0.6931471805599453;  // log 2
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  std::size_t sparse_k = 0;
  std::size_t threads = 0;
  std::string out = "results";
};

struct GradFlags {
  std::size_t dim = 50;
  std::size_t k = 0;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  bool force_include_target = false;
};

struct GenFlags {
  std::string out;
};

const std::map<std::string, std::vector<std::string>>& replayable_flags() {
  static const std::map<std::string, std::vector<std::string>> flags{
      {"train",
       {"loss", "k", "n-classes", "feature-dim", "samples-per-class", "noise", "epochs",
        "batch-size", "optimizer", "lr", "seed", "force-include-target", "fail-on-divergence",
        "record-wall-time", "model", "hidden"}},
      {"sweep-k",
       {"k", "n-classes", "feature-dim", "samples-per-class", "noise", "epochs", "batch-size",
        "optimizer", "lr", "seed", "force-include-target", "fail-on-divergence",
        "record-wall-time", "model", "hidden", "threads"}},
      {"verify-bound", {"n", "epsilon", "trials", "seed", "sparse-k", "threads"}},
      {"gen-data", {"n-classes", "feature-dim", "samples-per-class", "noise", "seed"}},
  };
  return flags;
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void add_data_flags(CLI::App* app, DataFlags& d) {
  app->add_option("--n-classes", d.n_classes, "number of classes")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))
      ->capture_default_str();
  app->add_option("--feature-dim", d.feature_dim, "feature dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--samples-per-class", d.samples_per_class, "samples drawn per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--noise", d.noise, "noise scale around class centroids")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--seed", d.seed, "seed for data, initialisation and shuffling")
      ->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainFlags& t, bool sweep) {
  if (sweep) {
    app->add_option("--k", t.k_grid, "comma-separated k grid")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--threads", t.threads, "grid points trained concurrently (0 = all cores)")
        ->capture_default_str();
  } else {
    app->add_option("--loss", t.loss, "loss function")
        ->check(CLI::IsMember({"softmax", "sparse"}))
        ->capture_default_str();
    app->add_option("--k", t.k, "sparse-softmax support size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  app->add_option("--epochs", t.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--batch-size", t.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--optimizer", t.optimizer)
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  app->add_option("--lr", t.lr, "learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_flag("--force-include-target", t.force_include_target,
                "swap the target into the support when top-k misses it");
  app->add_flag("--fail-on-divergence", t.fail_on_divergence,
                "exit nonzero if any run diverges");
  app->add_flag("--record-wall-time", t.record_wall_time,
                "fill wall_time_s (CSV is no longer byte-reproducible)");
  app->add_option("--model", t.model)
      ->check(CLI::IsMember({"linear", "mlp"}))
      ->capture_default_str();
  app->add_option("--hidden", t.hidden, "MLP hidden width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--out", t.out, "output directory")->capture_default_str();
}

TrainConfig train_config(const TrainFlags& t, std::uint64_t seed) {
  TrainConfig c;
  c.loss = t.loss == "sparse" ? LossKind::kSparse : LossKind::kSoftmax;
  c.k = t.k;
  c.epochs = t.epochs;
  c.batch_size = t.batch_size;
  c.optimizer.kind = t.optimizer == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  c.optimizer.lr = t.lr;
  c.seed = seed;
  c.force_include_target = t.force_include_target;
  return c;
}

ModelKind model_kind(const TrainFlags& t) {
  return t.model == "mlp" ? ModelKind::kMlp : ModelKind::kLinear;
}

void put_data(Manifest& m, const DataFlags& d) {
  m.set("n-classes", std::to_string(d.n_classes));
  m.set("feature-dim", std::to_string(d.feature_dim));
  m.set("samples-per-class", std::to_string(d.samples_per_class));
  m.set("noise", format_double(d.noise));
  m.set("seed", std::to_string(d.seed));
}

void put_train(Manifest& m, const TrainFlags& t, const TrainConfig& c) {
  m.set("epochs", std::to_string(t.epochs));
  m.set("batch-size", std::to_string(t.batch_size));
  m.set("optimizer", t.optimizer);
  m.set("lr", format_double(t.lr));
  m.set("force-include-target", bool_str(t.force_include_target));
  m.set("fail-on-divergence", bool_str(t.fail_on_divergence));
  m.set("record-wall-time", bool_str(t.record_wall_time));
  m.set("model", t.model);
  m.set("hidden", std::to_string(t.hidden));
  if (c.optimizer.kind == OptimizerKind::kAdam) {
    m.set("adam_beta1", format_double(c.optimizer.beta1));
    m.set("adam_beta2", format_double(c.optimizer.beta2));
    m.set("adam_eps", format_double(c.optimizer.eps));
  }
  m.set("init", "gaussian(0, 1/fan_in), zero bias");
}

Manifest base_manifest(const std::string& subcommand) {
  Manifest m;
  m.set("artifact_version", kArtifactVersion);
  m.set("subcommand", subcommand);
  return m;
}

int cmd_train(const DataFlags& d, const TrainFlags& t, std::ostream& out, std::ostream& err) {
  const SyntheticDataset data = generate_dataset(d.config());
  const TrainConfig config = train_config(t, d.seed);
  const Model initial = make_model(data, model_kind(t), t.hidden, d.seed);
  const TrainResult result = train(initial, data, config);

  const fs::path dir(t.out);
  fs::create_directories(dir);
  const std::string csv = run_file_name(config.loss, config.k, d.seed);
  write_records_csv(dir / csv, result.records, t.record_wall_time);

  out << loss_name(config.loss);
  if (config.loss == LossKind::kSparse) out << " (k=" << config.k << ")";
  out << ": " << result.records.size() << " epochs on " << data.train.rows() << " samples, "
      << data.n_classes() << " classes\n";
  if (!result.records.empty()) {
    const ExperimentRecord& last = result.records.back();
    out << "  final train loss " << format_double(last.mean_train_loss) << "  dev macro F1 "
        << format_double(last.eval_macro_f1) << "  dev micro F1 " << format_double(last.eval_micro_f1)
        << '\n';
  }
  out << "  wrote " << (dir / csv).string() << '\n';

  if (result.diverged) {
    out << "  diverged after " << result.records.size() << " epochs\n";
    if (t.fail_on_divergence) {
      err << "error: training diverged after " << result.records.size() << " epochs\n";
      return kCheckFailed;
    }
  }

  Manifest m = base_manifest("train");
  m.set("loss", t.loss);
  m.set("k", std::to_string(t.k));
  put_data(m, d);
  put_train(m, t, config);
  m.set("diverged", bool_str(result.diverged));
  m.set("csv", csv);
  m.write(dir / kManifestName);
  return 0;
}

int cmd_sweep(const DataFlags& d, const TrainFlags& t, std::ostream& out, std::ostream& err) {
  const SyntheticDataset data = generate_dataset(d.config());
  const TrainConfig base = train_config(t, d.seed);
  SweepOptions opts;
  opts.model = model_kind(t);
  opts.hidden = t.hidden;
  opts.threads = t.threads;
  const std::vector<SweepRow> rows = sweep_k(data, base, t.k_grid, opts);

  const fs::path dir(t.out);
  fs::create_directories(dir);
  std::ofstream summary(dir / "sweep_summary.csv", std::ios::binary);
  summary << "loss,k,macro_f1,micro_f1,final_train_loss,diverged\n";

  out << "k-sweep on " << data.n_classes() << " classes, " << t.epochs << " epochs, seed " << d.seed
      << (t.force_include_target ? ", force-include-target" : "") << '\n';
  out << "  " << std::left << std::setw(16) << "model" << std::setw(12) << "macro F1"
      << std::setw(12) << "micro F1" << "final loss\n";
  std::size_t divergent = 0;
  for (const SweepRow& row : rows) {
    write_records_csv(dir / run_file_name(row.loss, row.k, d.seed), row.records, t.record_wall_time);
    summary << loss_name(row.loss) << ',' << row.k << ',' << format_double(row.test.macro) << ','
            << format_double(row.test.micro) << ',' << format_double(row.final_train_loss) << ','
            << (row.diverged ? 1 : 0) << '\n';
    const std::string label =
        row.loss == LossKind::kSoftmax ? "softmax" : "sparse(k=" + std::to_string(row.k) + ")";
    std::ostringstream line;
    line << std::fixed << std::setprecision(4) << "  " << std::left << std::setw(16) << label
         << std::setw(12) << row.test.macro << std::setw(12) << row.test.micro
         << row.final_train_loss << (row.diverged ? "  DIVERGED" : "");
    out << line.str() << '\n';
    if (row.diverged) ++divergent;
  }
  summary.close();
  if (!summary) throw std::runtime_error("write failed: sweep_summary.csv");

  if (divergent && t.fail_on_divergence) {
    err << "error: " << divergent << " sweep row(s) diverged\n";
    return kCheckFailed;
  }

  Manifest m = base_manifest("sweep-k");
  m.set("k", join(t.k_grid));
  put_data(m, d);
  put_train(m, t, base);
  m.set("threads", std::to_string(t.threads));
  m.set("divergent_rows", std::to_string(divergent));
  m.write(dir / kManifestName);
  return 0;
}

int cmd_verify(const VerifyFlags& v, std::ostream& out, std::ostream& err) {
  analysis::VerifyOptions opts;
  opts.n = v.n;
  opts.epsilon = v.epsilon;
  opts.trials = v.trials;
  opts.seed = v.seed;
  if (v.sparse_k) opts.sparse_k = v.sparse_k;
  opts.threads = v.threads;
  const analysis::VerificationReport r = analysis::verify_necessary_condition(opts);

  const fs::path dir(v.out);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "verify_bound.csv", std::ios::binary);
    csv << analysis::report_csv_header() << '\n' << analysis::report_csv_row(r) << '\n';
    std::ofstream txt(dir / "verify_bound.txt", std::ios::binary);
    txt << analysis::report_text(r);
    if (!csv || !txt) throw std::runtime_error("failed writing verify-bound report");
  }
  out << analysis::report_text(r);
  if (!r.ok()) {
    err << "error: " << r.counterexamples << " counterexample(s) to the margin bound\n";
    return kCheckFailed;
  }

  Manifest m = base_manifest("verify-bound");
  m.set("n", std::to_string(v.n));
  m.set("epsilon", format_double(v.epsilon));
  m.set("trials", std::to_string(v.trials));
  m.set("seed", std::to_string(v.seed));
  m.set("sparse-k", std::to_string(v.sparse_k));
  m.set("threads", std::to_string(v.threads));
  m.set("spread_tolerance", format_double(analysis::kSpreadTolerance));
  m.write(dir / kManifestName);
  return 0;
}

int cmd_grad_check(const GradFlags& g, std::ostream& out, std::ostream& err) {
  GradCheckOptions opts;
  opts.dim = g.dim;
  opts.k = g.k;
  opts.trials = g.trials;
  opts.seed = g.seed;
  opts.force_include_target = g.force_include_target;
  const GradCheckReport r = run_grad_check(opts);
  out << grad_check_text(opts, r);
  if (!r.ok()) {
    err << "error: max relative gradient error " << format_double(r.max_error())
        << " exceeds " << format_double(kGradientTolerance) << '\n';
    return kCheckFailed;
  }
  return 0;
}

int cmd_gen_data(const DataFlags& d, const GenFlags& g, std::ostream& out) {
  const SyntheticDataset data = generate_dataset(d.config());
  const fs::path path(g.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_dataset(data, path);
  out << "wrote " << path.string() << ": " << data.train.rows() << "/" << data.dev.rows() << "/"
      << data.test.rows() << " train/dev/test rows, " << data.n_classes() << " classes\n";

  Manifest m = base_manifest("gen-data");
  put_data(m, d);
  fs::path manifest_path = path;
  manifest_path += ".manifest";
  m.write(manifest_path);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sparse-softmax experiment harness", "ssm"};
  app.require_subcommand(1);

  DataFlags data;
  TrainFlags train_flags;
  VerifyFlags verify;
  GradFlags grad;
  GenFlags gen;

  CLI::App* train_cmd = app.add_subcommand("train", "train one model and write per-epoch CSV");
  add_data_flags(train_cmd, data);
  add_train_flags(train_cmd, train_flags, false);

  CLI::App* sweep_cmd = app.add_subcommand("sweep-k", "train a softmax baseline and one sparse run per k");
  add_data_flags(sweep_cmd, data);
  add_train_flags(sweep_cmd, train_flags, true);

  CLI::App* verify_cmd = app.add_subcommand("verify-bound", "sample logits and check the margin bound");
  verify_cmd->add_option("--n", verify.n, "number of categories")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24))
      ->capture_default_str();
  verify_cmd->add_option("--epsilon", verify.epsilon, "loss ceiling (default log 2)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify_cmd->add_option("--trials", verify.trials)->check(CLI::PositiveNumber)->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed)->capture_default_str();
  verify_cmd->add_option("--sparse-k", verify.sparse_k, "check the sparse loss at this k (0 = full loss)")
      ->capture_default_str();
  verify_cmd->add_option("--threads", verify.threads, "0 = all cores")->capture_default_str();
  verify_cmd->add_option("--out", verify.out, "output directory")->capture_default_str();

  CLI::App* grad_cmd = app.add_subcommand("grad-check", "compare analytic gradients with finite differences");
  grad_cmd->add_option("--dim", grad.dim)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--k", grad.k, "support size (0 = random per trial)")->capture_default_str();
  grad_cmd->add_option("--trials", grad.trials)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_flag("--force-include-target", grad.force_include_target);

  CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset snapshot");
  add_data_flags(gen_cmd, data);
  gen_cmd->add_option("--out", gen.out, "output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return kUsageError;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(data, train_flags, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(data, train_flags, out, err);
    if (verify_cmd->parsed()) return cmd_verify(verify, out, err);
    if (grad_cmd->parsed()) return cmd_grad_check(grad, out, err);
    if (gen_cmd->parsed()) return cmd_gen_data(data, gen, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

std::vector<std::string> replay_args(const Manifest& manifest, const std::filesystem::path& out_path) {
  const auto sub = manifest.get("subcommand");
  if (!sub) throw std::runtime_error("manifest has no subcommand");
  const auto& table = replayable_flags();
  auto it = table.find(*sub);
  if (it == table.end()) throw std::runtime_error("subcommand '" + *sub + "' cannot be replayed");

  std::vector<std::string> args{*sub};
  for (const std::string& flag : it->second) {
    const auto value = manifest.get(flag);
    if (!value) continue;
    if (*value == "true") {
      args.push_back("--" + flag);
    } else if (*value != "false") {
      args.push_back("--" + flag);
      args.push_back(*value);
    }
  }
  args.push_back("--out");
  args.push_back(out_path.string());
  return args;
}

}  // namespace ssm::cli
