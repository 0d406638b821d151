#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hermifp/config.hpp"

namespace hermifp {

/// Writes `content` to `path` through a temporary file and an atomic rename,
/// creating parent directories as needed.  A crashed run never leaves a
/// truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Standard artifact preamble: the command, the config hash, and the full
/// canonical config bracketed by '# ---' sentinels.  The header alone
/// reconstructs the run that produced the file; identical configs produce
/// identical headers (no timestamps).
std::string artifact_header(const RunConfig& cfg);

/// An artifact split back into its parts.
struct ArtifactFile {
  std::string command;
  std::uint64_t hash = 0;
  std::string canonical;              // config text embedded in the header
  std::vector<std::string> payload;   // every line after the header
};

/// Reads a file written with artifact_header; verifies that the stamped hash
/// matches the embedded config text (corruption check).
ArtifactFile read_artifact(const std::filesystem::path& path);

/// Joins cells with commas; numeric cells should already be format_double'd.
std::string csv_row(const std::vector<std::string>& cells);

/// Inclusive endpoints, n >= 2 points.
std::vector<double> linspace(double lo, double hi, int n);

/// Grid block for density artifacts: a '# lo hi n [lo hi n]' geometry line,
/// then one value per line (1D) or one space-separated row per first-axis
/// point (2D, last axis fastest).
std::string grid_block(const std::vector<double>& lo, const std::vector<double>& hi,
                       const std::vector<int>& n, const std::vector<double>& values);

}  // namespace hermifp
