#pragma once

#include "phipd/corpus.hpp"
#include "phipd/denoiser.hpp"
#include "phipd/noise.hpp"

#include <filesystem>
#include <optional>
#include <string>

// JSON run configuration with three optional sections, each mirroring a
// config struct field by field:
//
//   {
//     "corpus": {"count": 100, "size": 64, "seed": 0, "min_objects": 1, "max_objects": 3},
//     "noise":  {"magnitude_source": "gaussian_fft", "cutoff_radius": "full",
//                "sigma": 2, "normalize": true, "seed": 0},
//     "train":  {"objective": "flow", "noise_mode": "structured", "epochs": 20,
//                "batch_size": 8, "learning_rate": 0.001,
//                "radius_sampler": {"r0": 4, "lambda": 0.1}, "sigma": 2,
//                "magnitude_source": "gaussian_fft", "normalize": true,
//                "ddpm_steps": 200, "beta_start": 0.0001, "beta_end": 0.02,
//                "seed": 0, "threads": 1}
//   }
//
// Missing keys keep their defaults. Unknown keys, wrong types and invalid
// values are all reported together in one InvalidArgument.

namespace phipd::cli {

struct RunConfig {
  corpus::SynthCorpusConfig corpus;
  noise::NoiseSpec noise;
  denoiser::TrainConfig train;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);

/// "none" -> nullopt, "full" / "inf" -> kFullCutoff, otherwise a number >= 0.
std::optional<double> parse_cutoff(const std::string& text);
std::string format_cutoff(const std::optional<double>& cutoff);

noise::MagnitudeSource parse_magnitude_source(const std::string& text);
std::string to_string(noise::MagnitudeSource source);
denoiser::Objective parse_objective(const std::string& text);
std::string to_string(denoiser::Objective objective);
denoiser::NoiseMode parse_noise_mode(const std::string& text);
std::string to_string(denoiser::NoiseMode mode);

}  // namespace phipd::cli
