#include "ssm/conformance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ssm/analysis.hpp"
#include "ssm/cli.hpp"
#include "ssm/core.hpp"
#include "ssm/dataset.hpp"
#include "ssm/format.hpp"
#include "ssm/gradcheck.hpp"
#include "ssm/metrics.hpp"
#include "ssm/trainer.hpp"

namespace ssm::conformance {

namespace fs = std::filesystem;

Kernels Kernels::reference() {
  return Kernels{
      [](const LogitVector& z, std::size_t k) { return ssm::top_k(z, k); },
      [](const LogitVector& z) { return ssm::softmax(z); },
      [](const LogitVector& z, std::size_t k) { return ssm::sparse_softmax(z, k); },
      [](const LogitVector& z, std::size_t t) { return ssm::ce_loss(z, t); },
      [](const LogitVector& z, std::size_t t, std::size_t k, bool force) {
        return ssm::sparse_ce_loss(z, t, k, force);
      },
  };
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const std::string& cell : split(s, ',')) {
    if (!cell.empty()) v.push_back(parse_double(cell));
  }
  return v;
}

Provenance parse_provenance(const std::string& s) {
  if (s == "PAPER") return Provenance::kPaper;
  if (s == "TRIVIAL") return Provenance::kTrivial;
  if (s == "DERIVED") return Provenance::kDerived;
  throw std::runtime_error("unknown provenance '" + s + "'");
}

struct Args {
  const std::map<std::string, std::string>& raw;

  const std::string& str(const std::string& key) const {
    auto it = raw.find(key);
    if (it == raw.end()) throw std::runtime_error("golden case missing argument '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_double(str(key)); }
  double num(const std::string& key, double fallback) const {
    return raw.count(key) ? num(key) : fallback;
  }
  std::size_t size(const std::string& key) const {
    return static_cast<std::size_t>(parse_int(str(key)));
  }
  std::vector<double> list(const std::string& key) const { return parse_list(str(key)); }
  std::vector<std::size_t> indices(const std::string& key) const {
    std::vector<std::size_t> v;
    for (double x : list(key)) v.push_back(static_cast<std::size_t>(x));
    return v;
  }
  DatasetConfig dataset() const {
    return {size("n_classes"), size("feature_dim"), size("samples_per_class"), num("noise", 0.0),
            static_cast<std::uint64_t>(parse_int(str("seed")))};
  }
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return kInf;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    if (std::isnan(d)) return kInf;
    m = std::max(m, d);
  }
  return m;
}

std::string render(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double17(v[i]);
  return s + "]";
}

CheckResult make_result(std::string id, double error, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.id = std::move(id);
  r.observed_error = error;
  r.tolerance = tolerance;
  r.passed = error <= tolerance;
  if (!r.passed) r.detail = std::move(detail);
  return r;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

int run_cli_silently(std::vector<std::string> argv, const fs::path& out_dir) {
  fs::remove_all(out_dir);
  argv.push_back("--out");
  argv.push_back(out_dir.string());
  std::ostringstream sink_out, sink_err;
  return cli::run(argv, sink_out, sink_err);
}

TrainConfig small_config(LossKind loss, std::size_t k, std::size_t epochs, std::uint64_t seed) {
  TrainConfig c;
  c.loss = loss;
  c.k = k;
  c.epochs = epochs;
  c.seed = seed;
  c.batch_size = 32;
  return c;
}

std::vector<double> evaluate_op(const GoldenCase& c, const Kernels& k, const fs::path& work_dir) {
  const Args a{c.args};
  const std::string& op = c.op;

  if (op == "top_k") {
    auto idx = k.top_k(LogitVector(a.list("z")), a.size("k")).indices;
    std::sort(idx.begin(), idx.end());
    return {idx.begin(), idx.end()};
  }
  if (op == "softmax") return k.softmax(LogitVector(a.list("z"))).values;
  if (op == "sparse_softmax") return k.sparse_softmax(LogitVector(a.list("z")), a.size("k")).values;
  if (op == "ce_loss") return {k.ce_loss(LogitVector(a.list("z")), a.size("t")).loss};
  if (op == "ce_grad") return k.ce_loss(LogitVector(a.list("z")), a.size("t")).gradient;
  if (op == "sparse_ce_loss" || op == "sparse_ce_loss_full") {
    const LossResult r = k.sparse_ce_loss(LogitVector(a.list("z")), a.size("t"), a.size("k"),
                                          a.size("force") != 0);
    std::vector<double> out{r.loss};
    if (op == "sparse_ce_loss_full") out.insert(out.end(), r.gradient.begin(), r.gradient.end());
    return out;
  }
  if (op == "required_spread") return {analysis::required_spread(a.num("epsilon"), a.size("n"))};
  if (op == "verify_bound") {
    analysis::VerifyOptions o;
    o.n = a.size("n");
    o.epsilon = a.num("epsilon");
    o.trials = a.size("trials");
    o.seed = static_cast<std::uint64_t>(parse_int(a.str("seed")));
    o.threads = 1;
    return {static_cast<double>(analysis::verify_necessary_condition(o).counterexamples)};
  }
  if (op == "margin_case") {
    const std::size_t n = a.size("n");
    const double bound = analysis::required_spread(a.num("epsilon"), n);
    const double base = a.num("base");
    std::vector<double> z(n, base);
    z[0] = base + bound + a.num("offset");
    const LogitVector logits(z);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    return {k.ce_loss(logits, argmax(z)).loss, *hi - *lo, bound};
  }
  if (op == "dataset_split") {
    const SyntheticDataset d = generate_dataset(a.dataset());
    return {static_cast<double>(d.train.rows()), static_cast<double>(d.dev.rows()),
            static_cast<double>(d.test.rows())};
  }
  if (op == "dataset_determinism") {
    return {generate_dataset(a.dataset()) == generate_dataset(a.dataset()) ? 1.0 : 0.0};
  }
  if (op == "train_separable") {
    DatasetConfig dc = a.dataset();
    dc.noise_scale = 0.0;
    const SyntheticDataset d = generate_dataset(dc);
    TrainConfig tc = small_config(LossKind::kSoftmax, 1, a.size("epochs"), dc.seed);
    tc.optimizer.lr = a.num("lr", 0.05);
    const TrainResult r = train(make_model(d, ModelKind::kLinear, 0, dc.seed), d, tc);
    return {evaluate(r.model, d.train).micro};
  }
  if (op == "train_reduction") {
    const SyntheticDataset d = generate_dataset(a.dataset());
    const Model m = make_model(d, ModelKind::kLinear, 0, d.config.seed);
    const auto soft = train(m, d, small_config(LossKind::kSoftmax, 1, a.size("epochs"), d.config.seed));
    const auto sparse = train(m, d, small_config(LossKind::kSparse, d.n_classes(), a.size("epochs"), d.config.seed));
    if (soft.records.size() != sparse.records.size()) return {kInf};
    double diff = 0.0;
    for (std::size_t e = 0; e < soft.records.size(); ++e) {
      diff = std::max(diff, std::abs(soft.records[e].mean_train_loss - sparse.records[e].mean_train_loss));
    }
    return {diff};
  }
  if (op == "train_sparse_vs_softmax") {
    const SyntheticDataset d = generate_dataset(a.dataset());
    const Model m = make_model(d, ModelKind::kLinear, 0, d.config.seed);
    TrainConfig tc;
    tc.epochs = a.size("epochs");
    tc.seed = d.config.seed;
    const auto soft = train(m, d, tc);
    tc.loss = LossKind::kSparse;
    tc.k = a.size("k");
    const auto sparse = train(m, d, tc);
    if (soft.diverged || sparse.diverged) return {kInf};
    return {std::max(0.0, sparse.records.back().mean_train_loss - soft.records.back().mean_train_loss)};
  }
  if (op == "f1") {
    const F1Scores s = f1_scores(a.indices("labels"), a.indices("preds"), a.size("n"));
    return {s.macro, s.micro};
  }
  if (op == "sweep_rows" || op == "sweep_reduction") {
    const SyntheticDataset d = generate_dataset(a.dataset());
    TrainConfig tc;
    tc.epochs = a.size("epochs");
    tc.seed = d.config.seed;
    if (op == "sweep_rows") return {static_cast<double>(sweep_k(d, tc, a.indices("k")).size())};
    const auto rows = sweep_k(d, tc, {d.n_classes()});
    return {std::max(std::abs(rows[0].test.macro - rows[1].test.macro),
                     std::abs(rows[0].test.micro - rows[1].test.micro))};
  }
  if (op == "cli_exit" || op == "cli_run_files" || op == "cli_verify_bound") {
    const fs::path dir = work_dir / c.id;
    auto argv = words(a.str("argv"));
    if (op == "cli_exit") {
      std::ostringstream sink_out, sink_err;
      return {static_cast<double>(cli::run(argv, sink_out, sink_err))};
    }
    const int code = run_cli_silently(argv, dir);
    if (op == "cli_run_files") {
      std::size_t runs = 0;
      if (fs::exists(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
          const auto name = entry.path().filename().string();
          if (entry.path().extension() == ".csv" && name.find("_seed") != std::string::npos) ++runs;
        }
      }
      return {static_cast<double>(code), static_cast<double>(runs)};
    }
    std::ifstream in(dir / "verify_bound.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    const auto cells = split(row, ',');
    if (cells.size() != 6) return {static_cast<double>(code), kInf, kInf};
    return {static_cast<double>(code), parse_double(cells[5]), parse_double(cells[3])};
  }
  throw std::runtime_error("unknown golden op '" + op + "'");
}

// ---------------------------------------------------------------------------
// Invariants

std::vector<double> gaussian_logits(std::mt19937_64& rng, std::size_t d, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> z(d);
  for (double& v : z) v = g(rng);
  return z;
}

// Indices of the k largest entries by full sort, lowest index on ties.
std::vector<std::size_t> brute_top_k(const std::vector<double>& z, std::size_t k) {
  std::vector<std::size_t> idx(z.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  idx.resize(std::min(k, z.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double min_pairwise_gap(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  double gap = kInf;
  for (std::size_t i = 1; i < z.size(); ++i) gap = std::min(gap, z[i] - z[i - 1]);
  return gap;
}

CheckResult inv_normalization(const Kernels& k) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dim(1, 50);
  double worst = 0.0;
  std::string detail;
  for (int s = 0; s < 2000; ++s) {
    const std::size_t d = dim(rng);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d + 5)(rng);
    const LogitVector z(gaussian_logits(rng, d, 4.0));
    const ProbabilityDistribution p = k.sparse_softmax(z, kk);
    const double sum = std::accumulate(p.values.begin(), p.values.end(), 0.0);
    double err = std::abs(sum - 1.0);
    const auto nonzero = static_cast<std::size_t>(
        std::count_if(p.values.begin(), p.values.end(), [](double v) { return v != 0.0; }));
    const bool negative = std::any_of(p.values.begin(), p.values.end(), [](double v) { return v < 0.0; });
    if (nonzero != std::min(kk, d) || negative) err = kInf;
    if (err > worst) {
      worst = err;
      detail = "d=" + std::to_string(d) + " k=" + std::to_string(kk) + " sum=" + format_double17(sum) +
               " nonzero=" + std::to_string(nonzero);
    }
  }
  return make_result("inv.core.normalization", worst, 1e-12, detail);
}

CheckResult inv_reduction(const Kernels& k) {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<std::size_t> dim(2, 300);
  double worst = 0.0;
  for (int s = 0; s < 2000; ++s) {
    const std::size_t d = dim(rng);
    const LogitVector z(gaussian_logits(rng, d, 5.0));
    worst = std::max(worst, max_abs_diff(k.sparse_softmax(z, d + (s % 3)).values, k.softmax(z).values));
  }
  return make_result("inv.core.reduction", worst, 1e-15);
}

CheckResult inv_subvector(const Kernels& k) {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (std::size_t d = 1; d <= 20; ++d) {
    for (std::size_t kk = 1; kk <= d; ++kk) {
      for (int s = 0; s < 20; ++s) {
        const auto raw = gaussian_logits(rng, d, 3.0);
        const auto omega = brute_top_k(raw, kk);
        std::vector<double> sub;
        for (std::size_t i : omega) sub.push_back(raw[i]);
        const auto expected = k.softmax(LogitVector(sub)).values;
        const auto p = k.sparse_softmax(LogitVector(raw), kk).values;
        std::vector<double> got;
        for (std::size_t i : omega) got.push_back(p[i]);
        worst = std::max(worst, max_abs_diff(expected, got));
      }
    }
  }
  return make_result("inv.core.subvector", worst, 1e-14);
}

CheckResult inv_argmax(const Kernels& k) {
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<std::size_t> dim(1, 60);
  std::uniform_int_distribution<int> small(-3, 3);
  std::size_t mismatches = 0;
  for (int s = 0; s < 3000; ++s) {
    const std::size_t d = dim(rng);
    std::vector<double> raw(d);
    // Half the draws are coarse integers so ties at the maximum occur.
    if (s % 2) {
      for (double& v : raw) v = small(rng);
    } else {
      raw = gaussian_logits(rng, d, 2.0);
    }
    const LogitVector z(raw);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    if (argmax(k.sparse_softmax(z, kk).values) != argmax(k.softmax(z).values)) ++mismatches;
  }
  return make_result("inv.core.argmax", static_cast<double>(mismatches), 0.0,
                     std::to_string(mismatches) + " argmax mismatches");
}

CheckResult inv_shift(const Kernels& k) {
  std::mt19937_64 rng(105);
  std::uniform_int_distribution<std::size_t> dim(1, 60);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  double worst = 0.0;
  for (int s = 0; s < 2000; ++s) {
    const std::size_t d = dim(rng);
    const auto raw = gaussian_logits(rng, d, 3.0);
    const double c = shift(rng);
    std::vector<double> shifted(raw);
    for (double& v : shifted) v += c;
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    const auto p = k.sparse_softmax(LogitVector(raw), kk);
    const auto q = k.sparse_softmax(LogitVector(shifted), kk);
    const double err = p.support == q.support ? max_abs_diff(p.values, q.values) : kInf;
    worst = std::max(worst, err);
  }
  return make_result("inv.core.shift", worst, 1e-12);
}

CheckResult inv_top_k(const Kernels& k) {
  std::mt19937_64 rng(106);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::uniform_int_distribution<int> small(0, 4);
  std::size_t failures = 0;
  std::string detail;
  for (int s = 0; s < 3000; ++s) {
    const std::size_t d = dim(rng);
    std::vector<double> raw(d);
    for (double& v : raw) v = small(rng);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d + 3)(rng);
    auto idx = k.top_k(LogitVector(raw), kk).indices;
    std::sort(idx.begin(), idx.end());
    // Exact match against the stable-sort oracle covers size, distinctness,
    // the top-k property and lowest-index tie-breaking at once.
    if (idx != brute_top_k(raw, kk)) {
      ++failures;
      if (detail.empty()) detail = "first failure at sample " + std::to_string(s);
    }
  }
  return make_result("inv.core.top_k", static_cast<double>(failures), 0.0, detail);
}

CheckResult inv_loss_ordering(const Kernels& k) {
  std::mt19937_64 rng(107);
  std::uniform_int_distribution<std::size_t> dim(1, 100);
  double worst = -kInf;
  for (int s = 0; s < 20000; ++s) {
    const std::size_t d = dim(rng);
    const LogitVector z(gaussian_logits(rng, d, 5.0));
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d + 2)(rng);
    const bool force = s % 2;
    worst = std::max(worst, k.sparse_ce_loss(z, t, kk, force).loss - k.ce_loss(z, t).loss);
  }
  // Reported as the largest excess of the sparse loss over the full loss.
  return make_result("inv.core.loss_ordering", std::max(0.0, worst), 1e-12,
                     "max excess " + format_double17(worst));
}

CheckResult inv_gradient(const Kernels& k) {
  std::mt19937_64 rng(108);
  std::uniform_int_distribution<std::size_t> dim(1, 30);
  double worst = 0.0;
  int kept = 0;
  while (kept < 300) {
    const std::size_t d = dim(rng);
    const auto raw = gaussian_logits(rng, d, 3.0);
    if (min_pairwise_gap(raw) <= 1e-3) continue;
    ++kept;
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    const bool force = kept % 2;
    const LogitVector z(raw);
    const auto ce_fd = central_difference(
        [&](const std::vector<double>& x) { return k.ce_loss(LogitVector(x), t).loss; }, raw,
        kFiniteDifferenceStep);
    const auto sp_fd = central_difference(
        [&](const std::vector<double>& x) { return k.sparse_ce_loss(LogitVector(x), t, kk, force).loss; },
        raw, kFiniteDifferenceStep);
    worst = std::max(worst, relative_error(k.ce_loss(z, t).gradient, ce_fd));
    worst = std::max(worst, relative_error(k.sparse_ce_loss(z, t, kk, force).gradient, sp_fd));
  }
  return make_result("inv.core.gradient", worst, kGradientTolerance);
}

CheckResult inv_zero_sum(const Kernels& k) {
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<std::size_t> dim(1, 200);
  double worst = 0.0;
  for (int s = 0; s < 3000; ++s) {
    const std::size_t d = dim(rng);
    const LogitVector z(gaussian_logits(rng, d, 4.0));
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
    const std::size_t kk = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    const auto g1 = k.ce_loss(z, t).gradient;
    worst = std::max(worst, std::abs(std::accumulate(g1.begin(), g1.end(), 0.0)));
    // Forcing the target in guarantees t is in the support.
    const auto g2 = k.sparse_ce_loss(z, t, kk, true).gradient;
    worst = std::max(worst, std::abs(std::accumulate(g2.begin(), g2.end(), 0.0)));
  }
  return make_result("inv.core.zero_sum", worst, 1e-10);
}

CheckResult inv_nonfinite_rejected(const Kernels&) {
  std::size_t accepted = 0;
  for (double bad : {std::nan(""), kInf, -kInf}) {
    try {
      LogitVector z({0.0, bad});
      ++accepted;
    } catch (const std::invalid_argument&) {
    }
  }
  try {
    LogitVector z(std::vector<double>{});
    ++accepted;
  } catch (const std::invalid_argument&) {
  }
  return make_result("inv.core.logit_validation", static_cast<double>(accepted), 0.0,
                     std::to_string(accepted) + " invalid vectors accepted");
}

CheckResult inv_margin_theorem(const Kernels&) {
  std::size_t counterexamples = 0;
  for (std::size_t n : {10u, 101u, 1000u}) {
    analysis::VerifyOptions o;
    o.n = n;
    o.trials = 20000;
    o.seed = 7;
    o.threads = 1;
    counterexamples += analysis::verify_necessary_condition(o).counterexamples;
  }
  return make_result("inv.analysis.margin_theorem", static_cast<double>(counterexamples), 0.0,
                     std::to_string(counterexamples) + " counterexamples");
}

CheckResult inv_margin_contrapositive(const Kernels& k) {
  // Direct form: spread below the bound forces the loss above epsilon.
  const double eps = std::log(2.0);
  std::size_t violations = 0;
  for (std::size_t n : {2u, 3u, 10u, 101u, 1000u}) {
    const double bound = analysis::required_spread(eps, n);
    for (double below : {1e-6, 1e-3, 0.1, 0.5, 2.0}) {
      if (bound - below < 0.0) continue;
      std::vector<double> z(n, 0.0);
      z[0] = bound - below;
      if (!(k.ce_loss(LogitVector(z), 0).loss > eps)) ++violations;
    }
  }
  return make_result("inv.analysis.contrapositive", static_cast<double>(violations), 0.0);
}

CheckResult inv_spread_monotonic(const Kernels&) {
  std::size_t violations = 0;
  const std::vector<double> eps_grid{0.01, 0.1, 0.5, std::log(2.0), 1.0, 2.0, 5.0};
  const std::vector<std::size_t> n_grid{2, 3, 5, 10, 50, 100, 1000, 10000};
  for (double e : eps_grid) {
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
      if (!(analysis::required_spread(e, n_grid[i]) > analysis::required_spread(e, n_grid[i - 1]))) ++violations;
    }
  }
  for (std::size_t n : n_grid) {
    for (std::size_t i = 1; i < eps_grid.size(); ++i) {
      if (!(analysis::required_spread(eps_grid[i], n) < analysis::required_spread(eps_grid[i - 1], n))) ++violations;
    }
  }
  return make_result("inv.analysis.monotonicity", static_cast<double>(violations), 0.0);
}

CheckResult inv_log2_case(const Kernels&) {
  double worst = 0.0;
  for (std::size_t n : {2u, 3u, 10u, 101u, 1000u, 100000u}) {
    worst = std::max(worst, std::abs(analysis::required_spread(0.6931471805599453, n) -
                                     std::log(static_cast<double>(n - 1))));
  }
  return make_result("inv.analysis.log2_bound", worst, 1e-12);
}

CheckResult inv_sparse_contrast(const Kernels&) {
  const double eps = std::log(2.0);
  std::size_t violations = 0;
  for (auto [n, kk] : std::vector<std::pair<std::size_t, std::size_t>>{
           {150, 1}, {150, 10}, {150, 20}, {150, 50}, {1000, 20}, {1000, 100}}) {
    const auto c = analysis::sparse_contrast(n, kk, eps, 0.25);
    if (!(c.sparse_loss <= eps && c.full_loss > eps)) ++violations;
  }
  analysis::VerifyOptions o;
  o.n = 150;
  o.trials = 10000;
  o.seed = 3;
  o.sparse_k = 20;
  o.threads = 1;
  violations += analysis::verify_necessary_condition(o).counterexamples;
  return make_result("inv.analysis.sparse_contrast", static_cast<double>(violations), 0.0);
}

SyntheticDataset tiny_dataset(std::uint64_t seed, double noise = 1.0) {
  return generate_dataset({12, 8, 20, noise, seed});
}

CheckResult inv_dataset(const Kernels&) {
  std::size_t failures = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = generate_dataset({7, 5, 3, 0.5, seed});
    std::vector<std::size_t> per_class(7, 0);
    for (std::size_t y : d.train.labels) {
      if (y >= 7) ++failures;
      else ++per_class[y];
    }
    for (std::size_t c : per_class) failures += c == 0;
    if (!(d == generate_dataset({7, 5, 3, 0.5, seed}))) ++failures;
  }
  return make_result("inv.trainer.dataset", static_cast<double>(failures), 0.0);
}

CheckResult inv_train_determinism(const Kernels&) {
  const auto d = tiny_dataset(4);
  const Model m = make_model(d, ModelKind::kMlp, 16, 4);
  TrainConfig c = small_config(LossKind::kSparse, 4, 4, 4);
  const auto a = train(m, d, c);
  const auto b = train(m, d, c);
  std::size_t diffs = a.records.size() != b.records.size();
  for (std::size_t e = 0; e < std::min(a.records.size(), b.records.size()); ++e) {
    diffs += a.records[e].mean_train_loss != b.records[e].mean_train_loss ||
             a.records[e].eval_macro_f1 != b.records[e].eval_macro_f1 ||
             a.records[e].eval_micro_f1 != b.records[e].eval_micro_f1;
  }
  diffs += !std::equal(a.model.parameters().begin(), a.model.parameters().end(),
                       b.model.parameters().begin(), b.model.parameters().end());
  return make_result("inv.trainer.determinism", static_cast<double>(diffs), 0.0);
}

CheckResult inv_train_reduction(const Kernels&) {
  const auto d = tiny_dataset(5);
  const Model m = make_model(d, ModelKind::kMlp, 10, 5);
  const auto soft = train(m, d, small_config(LossKind::kSoftmax, 1, 5, 5));
  const auto sparse = train(m, d, small_config(LossKind::kSparse, 12, 5, 5));
  double worst = soft.records.size() == sparse.records.size() ? 0.0 : kInf;
  for (std::size_t e = 0; e < std::min(soft.records.size(), sparse.records.size()); ++e) {
    worst = std::max(worst, std::abs(soft.records[e].mean_train_loss - sparse.records[e].mean_train_loss));
  }
  return make_result("inv.trainer.reduction", worst, 1e-10);
}

CheckResult inv_lifted_ordering(const Kernels&) {
  const auto d = tiny_dataset(6);
  double worst = -kInf;
  const TrainConfig c = small_config(LossKind::kSparse, 3, 6, 6);
  train(make_model(d, ModelKind::kLinear, 0, 6), d, c, [&](const Model& m, const ExperimentRecord&) {
    const double sparse = mean_loss(m, d.train, LossKind::kSparse, 3, false);
    const double full = mean_loss(m, d.train, LossKind::kSoftmax, 3, false);
    worst = std::max(worst, sparse - full);
  });
  return make_result("inv.trainer.loss_ordering", std::max(0.0, worst), 1e-12);
}

CheckResult inv_f1_bounds(const Kernels&) {
  std::mt19937_64 rng(110);
  std::size_t failures = 0;
  for (int s = 0; s < 500; ++s) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    std::uniform_int_distribution<std::size_t> cls(0, n - 1);
    ConfusionMatrix cm(n);
    for (std::size_t i = 0; i < len; ++i) cm.add(cls(rng), cls(rng));
    const double macro = cm.macro_f1(), micro = cm.micro_f1();
    if (!(macro >= 0.0 && macro <= 1.0 && micro >= 0.0 && micro <= 1.0)) ++failures;
    if (micro != cm.accuracy()) ++failures;
  }
  return make_result("inv.trainer.f1_bounds", static_cast<double>(failures), 0.0);
}

CheckResult inv_gd_sanity(const Kernels&) {
  const auto d = generate_dataset({20, 16, 10, 0.0, 8});
  TrainConfig c = small_config(LossKind::kSoftmax, 1, 30, 8);
  c.optimizer.kind = OptimizerKind::kSgd;
  c.optimizer.lr = 0.01;
  const auto r = train(make_model(d, ModelKind::kLinear, 0, 8), d, c);
  double worst = r.records.size() == c.epochs ? 0.0 : kInf;
  for (std::size_t e = 1; e < r.records.size(); ++e) {
    worst = std::max(worst, r.records[e].mean_train_loss - r.records[e - 1].mean_train_loss);
  }
  return make_result("inv.trainer.gd_monotone", std::max(0.0, worst), 0.0);
}

}  // namespace

std::vector<GoldenCase> parse_golden(std::istream& in) {
  std::vector<GoldenCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split(t, '|');
    if (f.size() != 7) {
      throw std::runtime_error("golden line " + std::to_string(line_no) + ": expected 7 fields");
    }
    GoldenCase c;
    c.id = f[0];
    c.provenance = parse_provenance(f[1]);
    c.oracle = f[2];
    c.op = f[3];
    for (const std::string& kv : split(f[4], ';')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::runtime_error("golden line " + std::to_string(line_no) + ": bad argument");
      c.args[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
    c.expected = parse_list(f[5]);
    c.tolerance = parse_double(f[6]);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<GoldenCase> load_golden(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open golden file " + path.string());
  return parse_golden(in);
}

CheckResult run_golden(const GoldenCase& c, const Kernels& k, const fs::path& work_dir) {
  std::vector<double> observed;
  try {
    observed = evaluate_op(c, k, work_dir);
  } catch (const std::exception& e) {
    return make_result(c.id, kInf, c.tolerance, std::string("threw: ") + e.what());
  }
  return make_result(c.id, max_abs_diff(c.expected, observed), c.tolerance,
                     "expected " + render(c.expected) + " observed " + render(observed));
}

const std::vector<Invariant>& invariant_registry() {
  static const std::vector<Invariant> registry{
      {"inv.core.logit_validation", "non-finite and empty logit vectors are rejected", inv_nonfinite_rejected},
      {"inv.core.top_k", "top-k matches a stable-sort oracle, ties to the lowest index", inv_top_k},
      {"inv.core.normalization", "sparse-softmax sums to 1 with min(k,d) nonzeros", inv_normalization},
      {"inv.core.reduction", "k >= d reproduces softmax", inv_reduction},
      {"inv.core.subvector", "nonzeros equal softmax of the top-k sub-vector", inv_subvector},
      {"inv.core.argmax", "sparse-softmax keeps the softmax argmax", inv_argmax},
      {"inv.core.shift", "adding a constant leaves support and probabilities unchanged", inv_shift},
      {"inv.core.loss_ordering", "sparse loss never exceeds the full loss", inv_loss_ordering},
      {"inv.core.gradient", "closed-form gradients match central differences", inv_gradient},
      {"inv.core.zero_sum", "gradients sum to zero when the target is in the support", inv_zero_sum},
      {"inv.analysis.margin_theorem", "no sampled counterexample to the spread bound", inv_margin_theorem},
      {"inv.analysis.contrapositive", "spread below the bound forces loss above epsilon", inv_margin_contrapositive},
      {"inv.analysis.monotonicity", "bound increases in n and decreases in epsilon", inv_spread_monotonic},
      {"inv.analysis.log2_bound", "epsilon = log 2 gives log(n-1)", inv_log2_case},
      {"inv.analysis.sparse_contrast", "sparse loss clears log 2 where the full loss cannot", inv_sparse_contrast},
      {"inv.trainer.dataset", "labels in range, every class trained, regeneration identical", inv_dataset},
      {"inv.trainer.determinism", "identical inputs give identical records and weights", inv_train_determinism},
      {"inv.trainer.reduction", "k = n_classes reproduces the softmax loss trajectory", inv_train_reduction},
      {"inv.trainer.loss_ordering", "sparse train loss <= full loss of the same model", inv_lifted_ordering},
      {"inv.trainer.f1_bounds", "F1 in [0, 1] and micro F1 equals accuracy", inv_f1_bounds},
      {"inv.trainer.gd_monotone", "SGD at lr 0.01 on separable data never raises the epoch loss", inv_gd_sanity},
  };
  return registry;
}

bool Report::all_passed() const { return failures() == 0; }

std::size_t Report::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

Report run_conformance(const Kernels& k, const RunOptions& opts) {
  auto selected = [&](const std::string& id) {
    if (opts.filter.empty()) return true;
    return std::any_of(opts.filter.begin(), opts.filter.end(),
                       [&](const std::string& p) { return id.rfind(p, 0) == 0; });
  };
  const fs::path work = opts.work_dir.empty() ? fs::temp_directory_path() / "ssm_conformance" : opts.work_dir;
  fs::create_directories(work);

  Report report;
  if (!opts.golden_file.empty()) {
    for (const GoldenCase& c : load_golden(opts.golden_file)) {
      if (selected(c.id)) report.checks.push_back(run_golden(c, k, work));
    }
  }
  if (opts.run_invariants) {
    for (const Invariant& inv : invariant_registry()) {
      if (!selected(inv.id)) continue;
      try {
        report.checks.push_back(inv.check(k));
      } catch (const std::exception& e) {
        report.checks.push_back(make_result(inv.id, kInf, 0.0, std::string("threw: ") + e.what()));
      }
    }
  }
  return report;
}

std::string report_text(const Report& r) {
  std::ostringstream os;
  for (const CheckResult& c : r.checks) {
    os << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.id << " err "
       << std::setw(24) << format_double(c.observed_error) << " tol " << format_double(c.tolerance);
    if (!c.passed && !c.detail.empty()) os << "\n     " << c.detail;
    os << '\n';
  }
  os << r.checks.size() - r.failures() << "/" << r.checks.size() << " checks passed\n";
  return os.str();
}

std::string report_csv(const Report& r) {
  std::string s = "case_id,status,observed_error,tolerance\n";
  for (const CheckResult& c : r.checks) {
    s += c.id + "," + (c.passed ? "pass" : "fail") + "," + format_double(c.observed_error) + "," +
         format_double(c.tolerance) + "\n";
  }
  return s;
}

}  // namespace ssm::conformance
