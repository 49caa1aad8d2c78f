#include "ssm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ssm/core.hpp"
#include "ssm/format.hpp"

namespace ssm::analysis {

double required_spread(double epsilon, std::size_t n) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  return std::log(static_cast<double>(n - 1)) - std::log(std::expm1(epsilon));
}

double required_spread_sparse(double epsilon, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (k == 1) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    return 0.0;
  }
  return required_spread(epsilon, k);
}

const char* family_name(SampleFamily f) {
  switch (f) {
    case SampleFamily::kUniform1: return "uniform[-1,1]";
    case SampleFamily::kUniform10: return "uniform[-10,10]";
    case SampleFamily::kGaussian1: return "gaussian(1)";
    case SampleFamily::kGaussian5: return "gaussian(5)";
    case SampleFamily::kNearBoundary: return "near-boundary";
  }
  return "?";
}

namespace {

std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
  return std::mt19937_64(seq);
}

struct Partial {
  std::size_t counterexamples = 0;
  std::size_t passing = 0;
  double min_passing_spread = std::numeric_limits<double>::infinity();
};

Partial run_range(const VerifyOptions& opts, double bound, std::size_t begin, std::size_t end) {
  Partial acc;
  for (std::size_t trial = begin; trial < end; ++trial) {
    const LogitVector z(sample_logits(opts.n, bound, opts.seed, trial));
    const std::size_t t = argmax(z.values());
    double loss = 0.0;
    double spread = 0.0;
    if (opts.sparse_k) {
      const SupportSet omega = top_k(z, *opts.sparse_k);
      loss = sparse_ce_loss(z, t, *opts.sparse_k).loss;
      spread = z[omega.indices.front()] - z[omega.indices.back()];
    } else {
      loss = ce_loss(z, t).loss;
      const auto [lo, hi] = std::minmax_element(z.values().begin(), z.values().end());
      spread = *hi - *lo;
    }
    if (loss <= opts.epsilon) {
      ++acc.passing;
      acc.min_passing_spread = std::min(acc.min_passing_spread, spread);
      if (spread < bound - kSpreadTolerance) ++acc.counterexamples;
    }
  }
  return acc;
}

}  // namespace

std::vector<double> sample_logits(std::size_t n, double bound, std::uint64_t seed,
                                  std::size_t trial) {
  auto rng = trial_rng(seed, trial);
  std::vector<double> z(n);
  const auto family = static_cast<SampleFamily>(trial % kNumFamilies);
  switch (family) {
    case SampleFamily::kUniform1:
    case SampleFamily::kUniform10: {
      const double s = family == SampleFamily::kUniform1 ? 1.0 : 10.0;
      std::uniform_real_distribution<double> u(-s, s);
      for (double& v : z) v = u(rng);
      break;
    }
    case SampleFamily::kGaussian1:
    case SampleFamily::kGaussian5: {
      const double s = family == SampleFamily::kGaussian1 ? 1.0 : 5.0;
      std::normal_distribution<double> g(0.0, s);
      for (double& v : z) v = g(rng);
      break;
    }
    case SampleFamily::kNearBoundary: {
      // One entry at base + spread, everything else pinned at base. The
      // spread sits exactly on the bound a quarter of the time and otherwise
      // within a log-uniform offset of it on either side.
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::uniform_real_distribution<double> base_dist(-5.0, 5.0);
      std::uniform_int_distribution<std::size_t> pos_dist(0, n - 1);
      const double base = base_dist(rng);
      const std::size_t pos = pos_dist(rng);
      double offset = 0.0;
      if (unit(rng) >= 0.25) {
        const double magnitude = std::pow(10.0, -9.0 * unit(rng));
        offset = unit(rng) < 0.5 ? -magnitude : magnitude;
      }
      const double spread = std::max(0.0, bound + offset);
      std::fill(z.begin(), z.end(), base);
      z[pos] = base + spread;
      break;
    }
  }
  return z;
}

VerificationReport verify_necessary_condition(const VerifyOptions& opts) {
  if (opts.trials == 0) throw std::invalid_argument("trials must be >= 1");
  const double bound = opts.sparse_k ? required_spread_sparse(opts.epsilon, *opts.sparse_k)
                                     : required_spread(opts.epsilon, opts.n);

  std::size_t threads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, opts.trials);

  std::vector<Partial> partials(threads);
  if (threads == 1) {
    partials[0] = run_range(opts, bound, 0, opts.trials);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (opts.trials + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = std::min(opts.trials, w * chunk);
      const std::size_t end = std::min(opts.trials, begin + chunk);
      workers.emplace_back([&, w, begin, end] { partials[w] = run_range(opts, bound, begin, end); });
    }
  }

  VerificationReport r;
  r.n = opts.n;
  r.epsilon = opts.epsilon;
  r.trials = opts.trials;
  r.sparse_k = opts.sparse_k;
  r.bound = bound;
  r.min_passing_spread = std::numeric_limits<double>::infinity();
  for (const Partial& p : partials) {
    r.counterexamples += p.counterexamples;
    r.passing += p.passing;
    r.min_passing_spread = std::min(r.min_passing_spread, p.min_passing_spread);
  }
  return r;
}

std::string report_csv_header() {
  return "n,epsilon,trials,counterexamples,min_passing_spread,bound";
}

std::string report_csv_row(const VerificationReport& r) {
  std::ostringstream os;
  os << r.n << ',' << format_double(r.epsilon) << ',' << r.trials << ',' << r.counterexamples
     << ',' << format_double(r.min_passing_spread) << ',' << format_double(r.bound);
  return os.str();
}

std::string report_text(const VerificationReport& r) {
  std::ostringstream os;
  os << "margin bound check: n=" << r.n;
  if (r.sparse_k) os << " (sparse, k=" << *r.sparse_k << ")";
  os << " epsilon=" << format_double(r.epsilon) << '\n'
     << "  required spread     " << format_double(r.bound) << '\n'
     << "  trials              " << r.trials << '\n'
     << "  loss <= epsilon     " << r.passing << '\n'
     << "  min passing spread  " << format_double(r.min_passing_spread) << '\n'
     << "  counterexamples     " << r.counterexamples << '\n'
     << "  result              " << (r.ok() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

SparseContrast sparse_contrast(std::size_t n, std::size_t k, double epsilon, double margin) {
  if (k == 0 || k > n) throw std::invalid_argument("need 1 <= k <= n");
  SparseContrast c;
  c.n = n;
  c.k = k;
  c.spread = required_spread_sparse(epsilon, k) + margin;
  std::vector<double> z(n, 0.0);
  z[0] = c.spread;
  const LogitVector logits(std::move(z));
  c.sparse_loss = sparse_ce_loss(logits, 0, k).loss;
  c.full_loss = ce_loss(logits, 0).loss;
  return c;
}

}  // namespace ssm::analysis
