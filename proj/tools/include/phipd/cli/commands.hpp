#pragma once

#include "phipd/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

// The `phipd` command line, runnable in-process.
//
//   noise        structured noise for one image (tensor + PGM)
//   phase-mix    phase of one image, magnitude of another
//   make-corpus  paired flat/shaded synthetic corpus
//   train        fit the denoiser; writes a checkpoint and loss history
//   sample       generate from structured noise built on input images
//   eval         metrics between image sets, or a cutoff-radius sweep
//   demo-video   per-frame structured noise (and samples) for a moving scene
//
// Every command is deterministic given its flags and --seed.

namespace phipd::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// key=value lines, one per report field.
std::string format_report(const metrics::MetricsReport& report);
metrics::MetricsReport parse_report(const std::string& text);

struct SweepRow {
  double radius = 0.0;
  double phase_correlation = 0.0;
  double log_mag_distance = 0.0;
};

/// Tab-separated table with a header line.
std::string format_sweep(const std::vector<SweepRow>& rows);

/// A single image file, or every image in a collection directory. Corpus
/// directories yield their `which` stack ("flat" or "shaded").
std::vector<ImageGrid> load_images(const std::filesystem::path& path, const std::string& which = "flat");

}  // namespace phipd::cli
