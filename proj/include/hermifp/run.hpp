#pragma once

#include <filesystem>
#include <iosfwd>

#include "hermifp/config.hpp"

namespace hermifp {

/// Executes a resolved run: dispatches on cfg.command, writes the command's
/// artifacts into out_dir, and reports progress (with wall-clock timings) to
/// `log`.  Wall time never enters an artifact, so reruns of the same config
/// are byte-identical.  Sweep artifacts found in out_dir with a matching
/// config hash are resumed rather than recomputed.  Throws on failure.
void run_command(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// run_command wrapped in the process exit-code convention:
///   0 success, 1 configuration error, 2 numerical failure, 3 I/O failure,
///   4 unexpected error.  The error message is written to `log`.
int run_with_exit_code(const RunConfig& cfg, const std::filesystem::path& out_dir,
                       std::ostream& log);

}  // namespace hermifp
