#pragma once

#include "phipd/image.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

// On-disk formats.
//
// Tensor container ("PDT1"): 4 magic bytes, then little-endian u32 version (1),
// u32 ndim, ndim x u64 dims, then row-major f64 values. Named collections of
// tensors live in a directory with a `manifest.txt` of `name<TAB>file` lines.

namespace phipd::io {

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(const std::string& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

Tensor to_tensor(const ImageGrid& img);
/// Accepts 2D tensors, or 3D with a leading dimension of 1.
ImageGrid to_image(const Tensor& tensor);

void write_image(const std::filesystem::path& path, const ImageGrid& img);
ImageGrid read_image(const std::filesystem::path& path);

/// 8-bit binary PGM (P5). Min-max normalised; constant images map to 128.
std::string encode_pgm(const ImageGrid& img);
void write_pgm(const std::filesystem::path& path, const ImageGrid& img);
/// Reads P5 with maxval <= 255, scaled to [0, 1].
ImageGrid read_pgm(const std::filesystem::path& path);

/// Tensor container or PGM, chosen by magic bytes.
ImageGrid load_any_image(const std::filesystem::path& path);

using Manifest = std::map<std::string, std::string>;

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& dir);

/// Writes each tensor as `<name>.pdt` and records it in the manifest.
void write_collection(const std::filesystem::path& dir, const std::map<std::string, Tensor>& items);
std::map<std::string, Tensor> read_collection(const std::filesystem::path& dir);

}  // namespace phipd::io
