#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "aia/config.hpp"
#include "aia/gradcheck.hpp"

namespace aia::cli {

// Stable exit codes for scripting.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDiverged = 3 };

// Entry point shared by the `aia` binary and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Gradient check over all neuron models; the options hook lets tests inject a
// corrupted backward.
int run_gradcheck(const RunConfig& cfg, const GradcheckOptions& options, std::ostream& out);

// Creates <root>/run-<UTC timestamp>[-k], never reusing an existing directory.
std::filesystem::path make_run_dir(const std::filesystem::path& root);

// Worker count from AIA_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace aia::cli
