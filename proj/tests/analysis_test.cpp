#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssm/analysis.hpp"
#include "ssm/core.hpp"

namespace an = ssm::analysis;

namespace {

constexpr double kLog2 = 0.6931471805599453;

TEST(RequiredSpread, MatchesOracle) {
  for (double eps : {0.01, 0.1, kLog2, 1.0, 3.0}) {
    for (std::size_t n : {2u, 3u, 10u, 101u, 1000u, 65536u}) {
      EXPECT_NEAR(an::required_spread(eps, n), static_cast<double>(oracle::required_spread(eps, n)), 1e-13)
          << eps << " " << n;
    }
  }
}

TEST(RequiredSpread, Log2GivesLogNMinusOne) {
  EXPECT_NEAR(an::required_spread(kLog2, 101), std::log(100.0), 1e-12);
  EXPECT_NEAR(an::required_spread(kLog2, 2), 0.0, 1e-12);
}

TEST(RequiredSpread, VacuousBoundReturnedNegative) {
  EXPECT_LT(an::required_spread(5.0, 2), 0.0);
}

TEST(RequiredSpread, RejectsBadArguments) {
  EXPECT_THROW(an::required_spread(0.0, 10), std::invalid_argument);
  EXPECT_THROW(an::required_spread(-1.0, 10), std::invalid_argument);
  EXPECT_THROW(an::required_spread(kLog2, 1), std::invalid_argument);
}

TEST(RequiredSpread, SparseUsesK) {
  EXPECT_DOUBLE_EQ(an::required_spread_sparse(kLog2, 20), an::required_spread(kLog2, 20));
  EXPECT_EQ(an::required_spread_sparse(kLog2, 1), 0.0);
}

TEST(Margin, BoundIsTightAtTheConstruction) {
  // One logit at spread b above n-1 equal logits gives loss exactly epsilon.
  for (std::size_t n : {3u, 10u, 101u}) {
    const double b = an::required_spread(kLog2, n);
    std::vector<double> z(n, 0.0);
    z[0] = b;
    EXPECT_NEAR(ssm::ce_loss(ssm::LogitVector(z), 0).loss, kLog2, 1e-14);
  }
}

TEST(Verify, NoCounterexamples) {
  for (std::size_t n : {2u, 10u, 101u}) {
    an::VerifyOptions o;
    o.n = n;
    o.trials = 5000;
    o.seed = 11;
    o.threads = 2;
    const auto r = an::verify_necessary_condition(o);
    EXPECT_TRUE(r.ok()) << n;
    EXPECT_EQ(r.trials, 5000u);
    EXPECT_GT(r.passing, 0u);
    EXPECT_GE(r.min_passing_spread, r.bound - an::kSpreadTolerance);
  }
}

TEST(Verify, IndependentOfThreadCount) {
  an::VerifyOptions o;
  o.n = 50;
  o.trials = 3000;
  o.seed = 5;
  o.threads = 1;
  const auto a = an::verify_necessary_condition(o);
  o.threads = 4;
  const auto b = an::verify_necessary_condition(o);
  EXPECT_EQ(a.passing, b.passing);
  EXPECT_EQ(a.min_passing_spread, b.min_passing_spread);
  EXPECT_EQ(an::report_csv_row(a), an::report_csv_row(b));
}

TEST(Verify, SparseModeAtKOne) {
  an::VerifyOptions o;
  o.n = 30;
  o.trials = 2000;
  o.sparse_k = 1;
  o.threads = 1;
  const auto r = an::verify_necessary_condition(o);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.bound, 0.0);
}

TEST(Sampling, DeterministicPerTrialAndCoversFamilies) {
  const double b = an::required_spread(kLog2, 20);
  EXPECT_EQ(an::sample_logits(20, b, 3, 17), an::sample_logits(20, b, 3, 17));
  EXPECT_NE(an::sample_logits(20, b, 3, 17), an::sample_logits(20, b, 4, 17));
  // The near-boundary family puts the spread within a hair of the bound.
  int near = 0;
  for (std::size_t trial = 4; trial < 400; trial += an::kNumFamilies) {
    const auto z = an::sample_logits(20, b, 3, trial);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    if (std::abs((*hi - *lo) - b) < 1e-3) ++near;
  }
  EXPECT_GT(near, 40);
}

TEST(SparseContrast, SparseClearsWhereFullCannot) {
  const auto c = an::sparse_contrast(150, 20, kLog2, 0.25);
  EXPECT_LE(c.sparse_loss, kLog2);
  EXPECT_GT(c.full_loss, kLog2);
  EXPECT_LT(c.spread, an::required_spread(kLog2, 150));
}

TEST(Report, CsvShape) {
  EXPECT_EQ(an::report_csv_header(), "n,epsilon,trials,counterexamples,min_passing_spread,bound");
  an::VerifyOptions o;
  o.n = 5;
  o.trials = 10;
  o.threads = 1;
  const auto row = an::report_csv_row(an::verify_necessary_condition(o));
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
}

}  // namespace
