#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "ssm/conformance.hpp"
#include "ssm/core.hpp"
#include "ssm/format.hpp"

namespace cf = ssm::conformance;
namespace fs = std::filesystem;

namespace {

const std::vector<cf::GoldenCase>& cases() {
  static const auto all = cf::load_golden(SSM_GOLDEN_FILE);
  return all;
}

const cf::GoldenCase& find_case(const std::string& id) {
  for (const auto& c : cases()) {
    if (c.id == id) return c;
  }
  throw std::runtime_error("no golden case " + id);
}

std::vector<double> list(const std::string& s) {
  std::vector<double> v;
  std::stringstream in(s);
  for (std::string cell; std::getline(in, cell, ',');) v.push_back(ssm::parse_double(cell));
  return v;
}

// Frozen expected values must agree with the extended-precision oracles to
// within half an ulp-ish slack; a typo in the table shows up here.
void expect_frozen(const std::string& id, const std::vector<oracle::Real>& recomputed) {
  const auto& c = find_case(id);
  ASSERT_EQ(c.expected.size(), recomputed.size()) << id;
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    const double want = static_cast<double>(recomputed[i]);
    EXPECT_LE(std::abs(c.expected[i] - want), 2e-16 * std::max(1.0, std::abs(want))) << id << "[" << i << "] oracle " << ssm::format_double17(want);
  }
}

TEST(GoldenTable, ParsesEveryLine) {
  EXPECT_GE(cases().size(), 30u);
  for (const auto& c : cases()) {
    EXPECT_FALSE(c.id.empty());
    EXPECT_FALSE(c.expected.empty()) << c.id;
    EXPECT_GE(c.tolerance, 0.0) << c.id;
  }
}

TEST(GoldenTable, MalformedLineIsRejected) {
  std::istringstream in("a | PAPER | x | op | k=1 | 1\n");
  EXPECT_THROW(cf::parse_golden(in), std::runtime_error);
  std::istringstream bad_prov("a | GUESS | x | op | k=1 | 1 | 0\n");
  EXPECT_THROW(cf::parse_golden(bad_prov), std::runtime_error);
}

TEST(GoldenDerived, SoftmaxValues) {
  const auto p = oracle::softmax({1, 2, 3});
  expect_frozen("core.softmax.123", p);
  expect_frozen("core.sparse_softmax.k_eq_d", p);
  expect_frozen("core.sparse_softmax.k2", oracle::sparse_softmax({1, 2, 3}, 2));
}

TEST(GoldenDerived, LossValues) {
  expect_frozen("core.ce_loss.uniform", {oracle::ce({0, 0, 0, 0, 0, 0, 0}, 3)});
  expect_frozen("core.ce_loss.margin_10", {oracle::softplus_neg(10)});
  expect_frozen("core.sparse_ce_loss.k_eq_d", {oracle::ce({1, 2, 3}, 2)});
  auto grad = oracle::softmax({1, 2, 3});
  grad[2] -= 1;
  expect_frozen("core.ce_loss.gradient_123", grad);
  auto sparse_grad = oracle::sparse_softmax({3, 2, 1}, 1);
  sparse_grad[2] -= 1;
  std::vector<oracle::Real> full{oracle::sparse_ce({3, 2, 1}, 2, 1)};
  full.insert(full.end(), sparse_grad.begin(), sparse_grad.end());
  expect_frozen("core.sparse_ce_loss.target_outside", full);
}

TEST(GoldenDerived, BoundValues) {
  const double log2 = 0.6931471805599453;
  expect_frozen("analysis.required_spread.log2_n101", {std::log(100.0L)});
  expect_frozen("analysis.required_spread.eps01_n1000", {oracle::required_spread(0.1L, 1000)});
  const oracle::Real b = oracle::required_spread(log2, 101);
  std::vector<double> z(101, 0.0);
  z[0] = static_cast<double>(b - 0.5L);
  expect_frozen("analysis.verify.below_bound", {oracle::ce(z, 0), b - 0.5L, b});
  expect_frozen("cli.verify_bound.n101", {0, b, 0});
}

TEST(GoldenDerived, F1Counts) {
  // Class 0: TP 3 FP 6 FN 0 -> 6/12. Classes 1 and 2 score 0.
  expect_frozen("trainer.evaluate.all_class0", {(6.0L / 12) / 3, 3.0L / 9});
  expect_frozen("trainer.evaluate.two_class", {0.5L, 0.5L});
}

// Every golden case is evaluated against the reference kernels.
class GoldenCaseTest : public ::testing::TestWithParam<std::string> {};

TEST_P(GoldenCaseTest, Passes) {
  const auto r = cf::run_golden(find_case(GetParam()), cf::Kernels::reference(),
                                fs::temp_directory_path() / "ssm_golden_test");
  EXPECT_TRUE(r.passed) << r.id << ": err " << r.observed_error << " tol " << r.tolerance << " " << r.detail;
}

std::vector<std::string> case_ids() {
  std::vector<std::string> ids;
  for (const auto& c : cases()) ids.push_back(c.id);
  return ids;
}

std::string gtest_name(const ::testing::TestParamInfo<std::string>& info) {
  std::string s = info.param;
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  }
  return s;
}

INSTANTIATE_TEST_SUITE_P(Table, GoldenCaseTest, ::testing::ValuesIn(case_ids()), gtest_name);

class InvariantTest : public ::testing::TestWithParam<std::string> {};

TEST_P(InvariantTest, Holds) {
  for (const auto& inv : cf::invariant_registry()) {
    if (inv.id != GetParam()) continue;
    const auto r = inv.check(cf::Kernels::reference());
    EXPECT_TRUE(r.passed) << inv.description << ": err " << r.observed_error << " " << r.detail;
    return;
  }
  FAIL() << "unknown invariant";
}

std::vector<std::string> invariant_ids() {
  std::vector<std::string> ids;
  for (const auto& inv : cf::invariant_registry()) ids.push_back(inv.id);
  return ids;
}

INSTANTIATE_TEST_SUITE_P(Registry, InvariantTest, ::testing::ValuesIn(invariant_ids()), gtest_name);

// The suite has to catch broken kernels, not just bless working ones.

const cf::Invariant& invariant(const std::string& id) {
  for (const auto& inv : cf::invariant_registry()) {
    if (inv.id == id) return inv;
  }
  throw std::runtime_error("no invariant " + id);
}

TEST(Mutation, SkippedRenormalizationIsCaught) {
  cf::Kernels k = cf::Kernels::reference();
  k.sparse_softmax = [](const ssm::LogitVector& z, std::size_t kk) {
    // Full softmax probabilities masked to the support, never renormalized.
    auto p = ssm::softmax(z);
    const auto keep = ssm::sparse_softmax(z, kk);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      if (keep.values[i] == 0.0) p.values[i] = 0.0;
    }
    p.support = keep.support;
    return p;
  };
  EXPECT_FALSE(invariant("inv.core.normalization").check(k).passed);
  EXPECT_FALSE(cf::run_golden(find_case("core.sparse_softmax.k2"), k, fs::temp_directory_path()).passed);
}

TEST(Mutation, HighestIndexTieBreakIsCaught) {
  cf::Kernels k = cf::Kernels::reference();
  k.top_k = [](const ssm::LogitVector& z, std::size_t kk) {
    // Reverse the vector so ties resolve toward the highest index.
    std::vector<double> rev(z.values().rbegin(), z.values().rend());
    auto s = ssm::top_k(ssm::LogitVector(rev), kk);
    for (auto& i : s.indices) i = z.size() - 1 - i;
    return s;
  };
  EXPECT_FALSE(cf::run_golden(find_case("core.top_k.tie_lowest_index"), k, fs::temp_directory_path()).passed);
  EXPECT_FALSE(invariant("inv.core.top_k").check(k).passed);
}

TEST(Mutation, WrongGradientSignIsCaught) {
  cf::Kernels k = cf::Kernels::reference();
  k.sparse_ce_loss = [](const ssm::LogitVector& z, std::size_t t, std::size_t kk, bool force) {
    auto r = ssm::sparse_ce_loss(z, t, kk, force);
    r.gradient[t] += 2.0;
    return r;
  };
  EXPECT_FALSE(invariant("inv.core.gradient").check(k).passed);
}

TEST(Mutation, NaiveExpOverflowIsCaught) {
  cf::Kernels k = cf::Kernels::reference();
  k.softmax = [](const ssm::LogitVector& z) {
    ssm::ProbabilityDistribution p;
    double sum = 0.0;
    for (double v : z.values()) sum += std::exp(v);
    for (std::size_t i = 0; i < z.size(); ++i) {
      p.values.push_back(std::exp(z[i]) / sum);
      p.support.push_back(i);
    }
    return p;
  };
  EXPECT_FALSE(cf::run_golden(find_case("core.softmax.shift_1000"), k, fs::temp_directory_path()).passed);
}

}  // namespace
