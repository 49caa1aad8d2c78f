#include <gtest/gtest.h>

#include <cmath>

#include "ssm/gradcheck.hpp"

namespace {

TEST(CentralDifference, ExactOnQuadratics) {
  const auto g = ssm::central_difference(
      [](const std::vector<double>& x) { return 3 * x[0] * x[0] + x[0] * x[1]; }, std::vector<double>{2, 5}, 1e-3);
  EXPECT_NEAR(g[0], 17.0, 1e-9);
  EXPECT_NEAR(g[1], 2.0, 1e-9);
}

TEST(RelativeError, Definition) {
  const std::vector<double> a{1.0, -2.0}, b{1.0, -2.5};
  EXPECT_DOUBLE_EQ(ssm::relative_error(a, b), 0.5 / 2.5);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(ssm::relative_error(zero, zero), 0.0);
}

TEST(GradCheck, PassesForBothLosses) {
  ssm::GradCheckOptions o;
  o.dim = 20;
  o.trials = 200;
  o.seed = 9;
  const auto r = ssm::run_grad_check(o);
  EXPECT_TRUE(r.ok()) << ssm::grad_check_text(o, r);
  EXPECT_EQ(r.trials, 200u);
  EXPECT_LT(r.max_zero_sum_ce, 1e-12);
}

TEST(GradCheck, ForceIncludeModeAndFixedK) {
  ssm::GradCheckOptions o;
  o.dim = 15;
  o.k = 3;
  o.trials = 200;
  o.force_include_target = true;
  EXPECT_TRUE(ssm::run_grad_check(o).ok());
}

TEST(GradCheck, DetectsAWrongGradient) {
  // A perturbed analytic gradient must exceed the tolerance.
  const std::vector<double> z{0.3, -1.2, 2.0};
  const auto fd = ssm::central_difference(
      [](const std::vector<double>& x) { return std::log(std::exp(x[0]) + std::exp(x[1]) + std::exp(x[2])) - x[0]; },
      z, ssm::kFiniteDifferenceStep);
  std::vector<double> wrong = fd;
  wrong[1] += 1e-3;
  EXPECT_GT(ssm::relative_error(wrong, fd), ssm::kGradientTolerance);
}

}  // namespace
