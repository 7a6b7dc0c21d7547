#include "phipd/checkpoint.hpp"

#include "phipd/error.hpp"
#include "phipd/tensor_io.hpp"

#include <algorithm>

namespace phipd::io {

void save_params(const std::filesystem::path& dir, const denoiser::DenoiserParams& params) {
  std::map<std::string, Tensor> items;
  const auto& layout = denoiser::param_layout();
  for (std::size_t b = 0; b < layout.size(); ++b) {
    const auto span = params.block(b);
    items[layout[b].name] = Tensor{{layout[b].shape.begin(), layout[b].shape.end()},
                                   {span.begin(), span.end()}};
  }
  write_collection(dir, items);
}

denoiser::DenoiserParams load_params(const std::filesystem::path& dir) {
  const auto items = read_collection(dir);
  denoiser::DenoiserParams params;
  const auto& layout = denoiser::param_layout();
  for (std::size_t b = 0; b < layout.size(); ++b) {
    const auto it = items.find(layout[b].name);
    if (it == items.end()) throw DataError("checkpoint is missing '" + layout[b].name + "'");
    const std::vector<std::uint64_t> expected(layout[b].shape.begin(), layout[b].shape.end());
    if (it->second.dims != expected) {
      throw DataError("checkpoint tensor '" + layout[b].name + "' has the wrong shape");
    }
    std::copy(it->second.values.begin(), it->second.values.end(), params.block(b).begin());
  }
  if (items.size() != layout.size()) throw DataError("checkpoint has unexpected tensors");
  return params;
}

void save_corpus(const std::filesystem::path& dir, const std::vector<corpus::SamplePair>& pairs) {
  if (pairs.empty()) throw InvalidArgument("save_corpus: no pairs");
  const std::uint64_t h = pairs[0].flat.height();
  const std::uint64_t w = pairs[0].flat.width();
  Tensor flat{{pairs.size(), h, w}, {}};
  Tensor shaded{{pairs.size(), h, w}, {}};
  for (const auto& p : pairs) {
    flat.values.insert(flat.values.end(), p.flat.values().begin(), p.flat.values().end());
    shaded.values.insert(shaded.values.end(), p.shaded.values().begin(), p.shaded.values().end());
  }
  write_collection(dir, {{"flat", std::move(flat)}, {"shaded", std::move(shaded)}});
}

namespace {

std::vector<ImageGrid> unstack(const Tensor& t, const std::string& name) {
  if (t.dims.size() != 3) throw DataError("corpus tensor '" + name + "' must be 3D");
  const std::size_t n = t.dims[0];
  const std::size_t h = t.dims[1];
  const std::size_t w = t.dims[2];
  std::vector<ImageGrid> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto first = t.values.begin() + static_cast<std::ptrdiff_t>(i * h * w);
    out.emplace_back(h, w, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(h * w)));
  }
  return out;
}

}  // namespace

CorpusImages load_corpus(const std::filesystem::path& dir) {
  const auto items = read_collection(dir);
  const auto flat = items.find("flat");
  const auto shaded = items.find("shaded");
  if (flat == items.end() || shaded == items.end()) {
    throw DataError(dir.string() + ": corpus needs 'flat' and 'shaded' tensors");
  }
  CorpusImages out{unstack(flat->second, "flat"), unstack(shaded->second, "shaded")};
  if (out.flat.size() != out.shaded.size()) throw DataError("corpus flat/shaded counts differ");
  return out;
}

}  // namespace phipd::io
