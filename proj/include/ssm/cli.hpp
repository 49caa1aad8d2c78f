#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssm/manifest.hpp"

namespace ssm::cli {

/// Runs one invocation; `args` excludes the program name. Returns the
/// process exit status: 0 on success, 1 when a checked property fails
/// (counterexample, gradient mismatch, divergence with
/// --fail-on-divergence), 2 on usage or I/O errors. Errors are reported as a
/// single line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reconstructs the invocation recorded in a manifest, redirecting its
/// output to `out_path`.
std::vector<std::string> replay_args(const Manifest& manifest,
                                     const std::filesystem::path& out_path);

inline constexpr const char* kManifestName = "manifest.txt";

}  // namespace ssm::cli
