#include "ssm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ssm/core.hpp"
#include "ssm/format.hpp"

namespace ssm {

std::vector<double> central_difference(const ScalarFn& f, std::span<const double> z, double h) {
  std::vector<double> x(z.begin(), z.end());
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("relative_error: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

double GradCheckReport::max_error() const noexcept {
  return std::max(max_error_ce, max_error_sparse);
}

bool GradCheckReport::ok(double tolerance) const noexcept {
  return max_error() < tolerance && max_zero_sum_ce < 1e-10;
}

namespace {

// Smallest gap between consecutive ranks around the support boundary. In
// force-include mode the (k-1, k) boundary matters too.
double boundary_gap(std::span<const double> z, std::size_t k, bool force) {
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double gap = std::numeric_limits<double>::infinity();
  if (k < sorted.size()) gap = sorted[k - 1] - sorted[k];
  if (force && k >= 2) gap = std::min(gap, sorted[k - 2] - sorted[k - 1]);
  return gap;
}

}  // namespace

GradCheckReport run_grad_check(const GradCheckOptions& opts) {
  if (opts.dim == 0) throw std::invalid_argument("dim must be >= 1");
  if (opts.trials == 0) throw std::invalid_argument("trials must be >= 1");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> pick_t(0, opts.dim - 1);
  std::uniform_int_distribution<std::size_t> pick_k(1, opts.dim);

  GradCheckReport r;
  std::vector<double> z(opts.dim);
  while (r.trials < opts.trials) {
    for (double& v : z) v = gauss(rng);
    const std::size_t t = pick_t(rng);
    const std::size_t k = opts.k ? opts.k : pick_k(rng);
    if (boundary_gap(z, std::min(k, opts.dim), opts.force_include_target) < kMinTopKGap) {
      ++r.rejected;
      continue;
    }
    ++r.trials;
    const LogitVector logits(z);

    const LossResult ce = ce_loss(logits, t);
    const auto ce_fd = central_difference(
        [t](const std::vector<double>& x) { return ce_loss(LogitVector(x), t).loss; }, z, opts.h);
    r.max_error_ce = std::max(r.max_error_ce, relative_error(ce.gradient, ce_fd));
    const double sum = std::accumulate(ce.gradient.begin(), ce.gradient.end(), 0.0);
    r.max_zero_sum_ce = std::max(r.max_zero_sum_ce, std::abs(sum));

    const bool force = opts.force_include_target;
    const LossResult sp = sparse_ce_loss(logits, t, k, force);
    const auto sp_fd = central_difference(
        [t, k, force](const std::vector<double>& x) {
          return sparse_ce_loss(LogitVector(x), t, k, force).loss;
        },
        z, opts.h);
    r.max_error_sparse = std::max(r.max_error_sparse, relative_error(sp.gradient, sp_fd));
  }
  return r;
}

std::string grad_check_text(const GradCheckOptions& opts, const GradCheckReport& r) {
  std::ostringstream os;
  os << "gradient check: dim=" << opts.dim << " k=" << (opts.k ? std::to_string(opts.k) : "random")
     << " h=" << format_double(opts.h) << (opts.force_include_target ? " force-include-target" : "")
     << '\n'
     << "  samples             " << r.trials << " (" << r.rejected << " redrawn near the top-k boundary)\n"
     << "  max rel err ce      " << format_double(r.max_error_ce) << '\n'
     << "  max rel err sparse  " << format_double(r.max_error_sparse) << '\n'
     << "  max |sum grad ce|   " << format_double(r.max_zero_sum_ce) << '\n'
     << "  tolerance           " << format_double(kGradientTolerance) << '\n'
     << "  result              " << (r.ok() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

}  // namespace ssm
