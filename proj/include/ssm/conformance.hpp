#pragma once

// Cross-module conformance: golden worked examples plus a registry of
// quantified properties, evaluated against a swappable set of kernels.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ssm/types.hpp"

namespace ssm::conformance {

/// The kernels under test. Mutated copies let the suite check that it
/// actually detects broken implementations.
struct Kernels {
  std::function<SupportSet(const LogitVector&, std::size_t)> top_k;
  std::function<ProbabilityDistribution(const LogitVector&)> softmax;
  std::function<ProbabilityDistribution(const LogitVector&, std::size_t)> sparse_softmax;
  std::function<LossResult(const LogitVector&, std::size_t)> ce_loss;
  std::function<LossResult(const LogitVector&, std::size_t, std::size_t, bool)> sparse_ce_loss;

  static Kernels reference();
};

enum class Provenance { kPaper, kTrivial, kDerived };

struct GoldenCase {
  std::string id;
  Provenance provenance = Provenance::kTrivial;
  std::string oracle;
  std::string op;
  std::map<std::string, std::string> args;
  std::vector<double> expected;
  double tolerance = 0.0;
};

/// Parses the "id | provenance | oracle | op | args | expected | tolerance"
/// format; '#' lines and blank lines are skipped.
std::vector<GoldenCase> parse_golden(std::istream& in);
std::vector<GoldenCase> load_golden(const std::filesystem::path& path);

struct CheckResult {
  std::string id;
  bool passed = false;
  double observed_error = 0.0;
  double tolerance = 0.0;
  std::string detail;  // expected vs observed on failure
};

/// Evaluates one golden case. Ops that need scratch files use `work_dir`.
CheckResult run_golden(const GoldenCase& c, const Kernels& k, const std::filesystem::path& work_dir);

struct Invariant {
  std::string id;
  std::string description;
  std::function<CheckResult(const Kernels&)> check;
};

/// Every quantified property, with fixed seeds and sampling budgets.
const std::vector<Invariant>& invariant_registry();

struct Report {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::size_t failures() const;
};

struct RunOptions {
  std::filesystem::path golden_file;
  std::filesystem::path work_dir;
  bool run_invariants = true;
  /// Only checks whose id starts with one of these prefixes (empty = all).
  std::vector<std::string> filter;
};

Report run_conformance(const Kernels& k, const RunOptions& opts);

std::string report_text(const Report& r);
/// case_id,status,observed_error,tolerance
std::string report_csv(const Report& r);

}  // namespace ssm::conformance
