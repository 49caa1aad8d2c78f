#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "ssm/core.hpp"

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t d, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> z(d);
  for (double& v : z) v = g(rng);
  return z;
}

TEST(LogitVector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(ssm::LogitVector(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(ssm::LogitVector({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(ssm::LogitVector({std::numeric_limits<double>::infinity()}), std::invalid_argument);
  EXPECT_NO_THROW(ssm::LogitVector({-1e300, 1e300}));
}

TEST(TopK, RankOrderAndTies) {
  const auto s = ssm::top_k(ssm::LogitVector({2, 7, 7, 1, 7}), 2);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_DOUBLE_EQ(s.boundary_gap, 0.0);
  EXPECT_TRUE(s.contains(2));
  EXPECT_FALSE(s.contains(4));
}

TEST(TopK, ClampsAndReportsInfiniteGap) {
  const auto s = ssm::top_k(ssm::LogitVector({1, 3}), 5);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(s.k_requested, 5u);
  EXPECT_TRUE(std::isinf(s.boundary_gap));
}

TEST(TopK, ZeroKThrows) {
  EXPECT_THROW(ssm::top_k(ssm::LogitVector({1.0}), 0), std::invalid_argument);
  EXPECT_THROW(ssm::sparse_softmax(ssm::LogitVector({1.0}), 0), std::invalid_argument);
}

TEST(TopK, MatchesSortOracleWithHeavyTies) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> v(0, 3);
  for (int s = 0; s < 2000; ++s) {
    const std::size_t d = 1 + s % 37;
    std::vector<double> z(d);
    for (double& x : z) x = v(rng);
    const std::size_t k = 1 + (s * 7) % (d + 2);
    auto got = ssm::top_k(ssm::LogitVector(z), k).indices;
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got, oracle::top_k_sorted(z, k)) << "sample " << s;
  }
}

TEST(Softmax, MatchesExtendedPrecision) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 500; ++s) {
    const auto z = draw(rng, 1 + s % 80, 6.0);
    const auto p = ssm::softmax(ssm::LogitVector(z)).values;
    const auto q = oracle::softmax(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      ASSERT_NEAR(p[i], static_cast<double>(q[i]), 2e-15) << "sample " << s;
    }
  }
}

TEST(Softmax, LargeMagnitudesStayFinite) {
  const auto p = ssm::softmax(ssm::LogitVector({-1e4, 1e4, 1e4})).values;
  EXPECT_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_DOUBLE_EQ(p[2], 0.5);
}

TEST(SparseSoftmax, MatchesExtendedPrecision) {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 500; ++s) {
    const std::size_t d = 1 + s % 60;
    const auto z = draw(rng, d, 4.0);
    const std::size_t k = 1 + s % d;
    const auto p = ssm::sparse_softmax(ssm::LogitVector(z), k);
    const auto q = oracle::sparse_softmax(z, k);
    EXPECT_EQ(p.support, oracle::top_k_sorted(z, k));
    for (std::size_t i = 0; i < d; ++i) ASSERT_NEAR(p.values[i], static_cast<double>(q[i]), 2e-15);
  }
}

TEST(SparseSoftmax, FullSupportIsBitwiseSoftmax) {
  std::mt19937_64 rng(4);
  for (int s = 0; s < 200; ++s) {
    const auto z = draw(rng, 2 + s, 5.0);
    const ssm::LogitVector lz(z);
    EXPECT_EQ(ssm::sparse_softmax(lz, z.size()).values, ssm::softmax(lz).values);
  }
}

TEST(LogSumExp, TinyRemainderKeepsPrecision) {
  const std::vector<double> z{0.0, -40.0};
  EXPECT_DOUBLE_EQ(ssm::log_sum_exp(z), std::exp(-40.0));
  EXPECT_THROW(ssm::log_sum_exp(z, std::vector<std::size_t>{}), std::invalid_argument);
}

TEST(CeLoss, MatchesOracleAndGradientIsPMinusOneHot) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 500; ++s) {
    const std::size_t d = 2 + s % 50;
    const auto z = draw(rng, d, 3.0);
    const std::size_t t = s % d;
    const auto r = ssm::ce_loss(ssm::LogitVector(z), t);
    const double want = static_cast<double>(oracle::ce(z, t));
    ASSERT_NEAR(r.loss, want, 1e-14 * std::max(1.0, want));
    const auto p = oracle::softmax(z);
    for (std::size_t i = 0; i < d; ++i) {
      ASSERT_NEAR(r.gradient[i], static_cast<double>(p[i] - (i == t ? 1 : 0)), 1e-15);
    }
  }
}

TEST(CeLoss, SmallLossHasFullRelativePrecision) {
  for (double margin : {5.0, 10.0, 20.0, 30.0}) {
    const double got = ssm::ce_loss(ssm::LogitVector({margin, 0.0}), 0).loss;
    const double want = static_cast<double>(oracle::softplus_neg(margin));
    EXPECT_NEAR(got / want, 1.0, 4e-16) << margin;
  }
}

TEST(CeLoss, TargetOutOfRangeThrows) {
  EXPECT_THROW(ssm::ce_loss(ssm::LogitVector({1, 2}), 2), std::out_of_range);
  EXPECT_THROW(ssm::sparse_ce_loss(ssm::LogitVector({1, 2}), 5, 1), std::out_of_range);
}

TEST(SparseCeLoss, MatchesOracle) {
  std::mt19937_64 rng(6);
  for (int s = 0; s < 500; ++s) {
    const std::size_t d = 2 + s % 40;
    const auto z = draw(rng, d, 3.0);
    const std::size_t t = (s * 3) % d;
    const std::size_t k = 1 + s % d;
    const auto r = ssm::sparse_ce_loss(ssm::LogitVector(z), t, k);
    const double want = static_cast<double>(oracle::sparse_ce(z, t, k));
    ASSERT_NEAR(r.loss, want, 1e-13 * std::max(1.0, std::abs(want)));
    const auto p = oracle::sparse_softmax(z, k);
    for (std::size_t i = 0; i < d; ++i) {
      ASSERT_NEAR(r.gradient[i], static_cast<double>(p[i] - (i == t ? 1 : 0)), 1e-15);
    }
  }
}

TEST(SparseCeLoss, TargetOutsideSupportCanGoNegative) {
  // Support {0}, target 2: loss = z0 - z2 with no log term.
  const auto r = ssm::sparse_ce_loss(ssm::LogitVector({3, 2, 1}), 2, 1);
  EXPECT_DOUBLE_EQ(r.loss, 2.0);
  EXPECT_EQ(r.gradient, (std::vector<double>{1, 0, -1}));
  const auto neg = ssm::sparse_ce_loss(ssm::LogitVector({1, 2, 3}), 0, 1);
  EXPECT_DOUBLE_EQ(neg.loss, 2.0);
}

TEST(SparseCeLoss, ForceIncludeReplacesLowestRanked) {
  const ssm::LogitVector z({5, 4, 3, 2, 1});
  const auto omega = ssm::loss_support(z, 4, 3, true);
  EXPECT_EQ(omega.indices, (std::vector<std::size_t>{0, 1, 4}));
  const auto r = ssm::sparse_ce_loss(z, 4, 3, true);
  const double want = static_cast<double>(oracle::lse({5, 4, 3, 2, 1}, {0, 1, 4}) - 1);
  EXPECT_NEAR(r.loss, want, 1e-15);
  EXPECT_EQ(r.gradient[2], 0.0);
  EXPECT_EQ(r.gradient[3], 0.0);
}

TEST(SparseCeLoss, ForceIncludeAtKOneIsIdenticallyZero) {
  const auto r = ssm::sparse_ce_loss(ssm::LogitVector({9, 1, 4}), 1, 1, true);
  EXPECT_EQ(r.loss, 0.0);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(SparseCeLoss, ForceIncludeNoOpWhenTargetInSupport) {
  const ssm::LogitVector z({5, 4, 3, 2, 1});
  EXPECT_EQ(ssm::sparse_ce_loss(z, 1, 3, true).loss, ssm::sparse_ce_loss(z, 1, 3, false).loss);
}

TEST(Argmax, FirstOfEqualMaxima) {
  const std::vector<double> v{1, 4, 4, 2};
  EXPECT_EQ(ssm::argmax(v), 1u);
}

}  // namespace
