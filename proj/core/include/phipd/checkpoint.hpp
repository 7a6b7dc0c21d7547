#pragma once

#include "phipd/corpus.hpp"
#include "phipd/denoiser.hpp"

#include <filesystem>
#include <vector>

// Directory layouts built on the tensor container + manifest.

namespace phipd::io {

/// One tensor per parameter block, named as in denoiser::param_layout().
void save_params(const std::filesystem::path& dir, const denoiser::DenoiserParams& params);
denoiser::DenoiserParams load_params(const std::filesystem::path& dir);

/// Corpus directory: `flat` and `shaded` tensors of shape [count, size, size].
void save_corpus(const std::filesystem::path& dir, const std::vector<corpus::SamplePair>& pairs);

struct CorpusImages {
  std::vector<ImageGrid> flat;
  std::vector<ImageGrid> shaded;
};
CorpusImages load_corpus(const std::filesystem::path& dir);

}  // namespace phipd::io
