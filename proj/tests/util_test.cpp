#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "ssm/format.hpp"
#include "ssm/manifest.hpp"
#include "ssm/metrics.hpp"
#include "ssm/optimizer.hpp"

namespace fs = std::filesystem;

namespace {

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(ssm::parse_double(ssm::format_double(v)), v);
  }
  EXPECT_EQ(ssm::format_double(0.1), "0.1");
  EXPECT_EQ(ssm::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(ssm::format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(ssm::format_double(std::nan("")), "nan");
  EXPECT_EQ(ssm::format_double17(0.1), "0.10000000000000001");
}

TEST(Format, StrictParsing) {
  EXPECT_THROW(ssm::parse_double("1.0x"), std::invalid_argument);
  EXPECT_THROW(ssm::parse_double(""), std::invalid_argument);
  EXPECT_TRUE(std::isinf(ssm::parse_double("inf")));
  EXPECT_EQ(ssm::parse_int("-42"), -42);
  EXPECT_THROW(ssm::parse_int("4.2"), std::invalid_argument);
}

TEST(Manifest, WriteReadPreservesOrder) {
  const fs::path dir = fs::temp_directory_path() / "ssm_manifest_test";
  fs::create_directories(dir);
  ssm::Manifest m;
  m.set("subcommand", "train");
  m.set("lr", "0.001");
  m.set("loss", "sparse");
  m.set("lr", "0.01");
  m.write(dir / "m.txt");
  const auto back = ssm::Manifest::read(dir / "m.txt");
  EXPECT_EQ(back.entries(), m.entries());
  EXPECT_EQ(back.get("lr"), "0.01");
  EXPECT_FALSE(back.get("missing").has_value());
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "m.txt");
  fs::remove_all(dir);
}

TEST(Metrics, HandCountedMatrix) {
  ssm::ConfusionMatrix cm(3);
  // refs 0 0 1 1 2 ; preds 0 1 1 1 0
  for (auto [r, p] : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}, {1, 1}, {2, 0}}) cm.add(r, p);
  EXPECT_EQ(cm.true_positives(1), 2u);
  EXPECT_EQ(cm.false_positives(1), 1u);
  EXPECT_EQ(cm.false_negatives(0), 1u);
  EXPECT_DOUBLE_EQ(cm.f1(0), 0.5);
  EXPECT_DOUBLE_EQ(cm.f1(1), 0.8);
  EXPECT_DOUBLE_EQ(cm.f1(2), 0.0);
  EXPECT_DOUBLE_EQ(cm.macro_f1(), 1.3 / 3);
  EXPECT_DOUBLE_EQ(cm.micro_f1(), 0.6);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 0.6);
}

TEST(Metrics, AbsentClassCountsAsZero) {
  const std::vector<std::size_t> refs{0, 0}, preds{0, 0};
  const auto s = ssm::f1_scores(refs, preds, 4);
  EXPECT_DOUBLE_EQ(s.macro, 0.25);
  EXPECT_DOUBLE_EQ(s.micro, 1.0);
}

TEST(Metrics, MergeEqualsPooled) {
  ssm::ConfusionMatrix a(3), b(3), all(3);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const std::size_t r = rng() % 3, p = rng() % 3;
    (i % 2 ? a : b).add(r, p);
    all.add(r, p);
  }
  a.merge(b);
  EXPECT_EQ(a.macro_f1(), all.macro_f1());
  EXPECT_EQ(a.total(), 200u);
}

TEST(Metrics, RejectsBadInput) {
  const std::vector<std::size_t> empty, one{0}, two{0, 1}, bad{7};
  EXPECT_THROW(ssm::f1_scores(empty, empty, 2), std::invalid_argument);
  EXPECT_THROW(ssm::f1_scores(one, two, 2), std::invalid_argument);
  EXPECT_THROW(ssm::f1_scores(bad, bad, 2), std::out_of_range);
}

TEST(Optimizer, SgdStep) {
  std::vector<double> p{1.0, 2.0};
  ssm::Sgd(0.5).step(p, std::vector<double>{2.0, -2.0});
  EXPECT_EQ(p, (std::vector<double>{0.0, 3.0}));
}

TEST(Optimizer, AdamFirstStepIsLrTimesSign) {
  // Bias correction makes the first update lr * g / (|g| + eps').
  ssm::OptimizerConfig c;
  c.lr = 0.1;
  ssm::Adam adam(2, c);
  std::vector<double> p{0.0, 0.0};
  adam.step(p, std::vector<double>{3.0, -0.5});
  EXPECT_NEAR(p[0], -0.1, 1e-8);
  EXPECT_NEAR(p[1], 0.1, 1e-7);
}

TEST(Optimizer, AdamMinimisesQuadratic) {
  ssm::OptimizerConfig c;
  c.lr = 0.05;
  auto opt = ssm::make_optimizer(c, 1);
  std::vector<double> x{5.0};
  for (int i = 0; i < 2000; ++i) opt->step(x, std::vector<double>{2 * (x[0] - 1.5)});
  EXPECT_NEAR(x[0], 1.5, 1e-3);
}

TEST(Optimizer, ValidatesConfig) {
  ssm::OptimizerConfig c;
  c.lr = 0.0;
  EXPECT_THROW(ssm::make_optimizer(c, 1), std::invalid_argument);
  c.lr = 1e-3;
  c.beta1 = 1.0;
  EXPECT_THROW(ssm::make_optimizer(c, 1), std::invalid_argument);
}

}  // namespace
