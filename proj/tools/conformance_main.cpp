// Runs the golden cases and the property registry against the reference
// kernels. Exit 0 when every check passes, 1 otherwise.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ssm/conformance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sparse-softmax conformance runner"};
  ssm::conformance::RunOptions opts;
  std::string csv_path;
  bool golden_only = false;
  app.add_option("--golden", opts.golden_file, "golden case file")->check(CLI::ExistingFile);
  app.add_option("--work-dir", opts.work_dir, "scratch directory for CLI cases");
  app.add_option("--filter", opts.filter, "only ids with these prefixes");
  app.add_option("--csv", csv_path, "also write case_id,status,observed_error,tolerance");
  app.add_flag("--golden-only", golden_only, "skip the property registry");
  CLI11_PARSE(app, argc, argv);
  opts.run_invariants = !golden_only;

  try {
    const auto report = ssm::conformance::run_conformance(ssm::conformance::Kernels::reference(), opts);
    std::cout << ssm::conformance::report_text(report);
    if (!csv_path.empty()) std::ofstream(csv_path) << ssm::conformance::report_csv(report);
    return report.all_passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
