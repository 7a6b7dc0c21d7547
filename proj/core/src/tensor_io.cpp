#include "phipd/tensor_io.hpp"

#include "phipd/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace phipd::io {

namespace {

constexpr char kMagic[4] = {'P', 'D', 'T', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kManifestName = "manifest.txt";

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (in.size() < pos + sizeof(U)) throw DataError("tensor container truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::string encode_tensor(const Tensor& tensor) {
  std::uint64_t count = 1;
  for (auto d : tensor.dims) count *= d;
  if (count != tensor.values.size()) {
    throw InvalidArgument("encode_tensor: dims do not match the number of values");
  }
  std::string out(kMagic, 4);
  put_le(out, kVersion);
  put_le(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le(out, d);
  for (double v : tensor.values) put_le(out, v);
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("not a PDT1 tensor container (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw DataError("unsupported tensor version " + std::to_string(version));
  const auto ndim = get_le<std::uint32_t>(bytes, pos);
  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.dims.push_back(get_le<std::uint64_t>(bytes, pos));
    count *= t.dims.back();
  }
  if ((bytes.size() - pos) % 8 != 0 || (bytes.size() - pos) / 8 != count) {
    throw DataError("tensor payload holds " + std::to_string((bytes.size() - pos) / 8) +
                    " values but dims declare " + std::to_string(count));
  }
  t.values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) t.values.push_back(get_le<double>(bytes, pos));
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  write_file(path, encode_tensor(tensor));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

Tensor to_tensor(const ImageGrid& img) {
  return {{img.height(), img.width()}, img.storage()};
}

ImageGrid to_image(const Tensor& tensor) {
  std::vector<std::uint64_t> dims = tensor.dims;
  if (dims.size() == 3 && dims[0] == 1) dims.erase(dims.begin());
  if (dims.size() != 2) throw DataError("expected a 2D tensor for an image");
  return ImageGrid(dims[0], dims[1], tensor.values);
}

void write_image(const std::filesystem::path& path, const ImageGrid& img) {
  write_tensor(path, to_tensor(img));
}

ImageGrid read_image(const std::filesystem::path& path) { return to_image(read_tensor(path)); }

std::string encode_pgm(const ImageGrid& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  const double min = img.empty() ? 0.0 : *lo;
  const double max = img.empty() ? 0.0 : *hi;
  for (double v : img.values()) {
    const double level = max > min ? std::round(255.0 * (v - min) / (max - min)) : 128.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0.0, 255.0))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& img) {
  write_file(path, encode_pgm(img));
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
  long width = 0, height = 0, maxval = 0;
  try {
    width = std::stol(next_token());
    height = std::stol(next_token());
    maxval = std::stol(next_token());
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PGM header");
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw DataError(path.string() + ": unsupported PGM dimensions or maxval");
  }
  ++pos;  // single whitespace byte after maxval
  const auto count = static_cast<std::size_t>(width * height);
  if (bytes.size() < pos + count) throw DataError(path.string() + ": PGM payload truncated");
  ImageGrid img(static_cast<std::size_t>(height), static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < count; ++i) {
    img[i] = static_cast<unsigned char>(bytes[pos + i]) / static_cast<double>(maxval);
  }
  return img;
}

ImageGrid load_any_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  if (in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0) return read_image(path);
  if (in.gcount() >= 2 && head[0] == 'P' && head[1] == '5') return read_pgm(path);
  throw DataError(path.string() + ": neither a PDT1 tensor nor a P5 PGM");
}

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
  std::filesystem::create_directories(dir);
  std::string text;
  for (const auto& [name, file] : manifest) text += name + "\t" + file + "\n";
  write_file(dir / kManifestName, text);
}

Manifest read_manifest(const std::filesystem::path& dir) {
  std::istringstream in(read_file(dir / kManifestName));
  Manifest manifest;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError((dir / kManifestName).string() + ":" + std::to_string(lineno) +
                      ": expected name<TAB>file");
    }
    manifest[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return manifest;
}

void write_collection(const std::filesystem::path& dir,
                      const std::map<std::string, Tensor>& items) {
  std::filesystem::create_directories(dir);
  Manifest manifest;
  for (const auto& [name, tensor] : items) {
    if (name.empty() || name.find_first_of("/\\\t\n") != std::string::npos) {
      throw InvalidArgument("invalid tensor name '" + name + "'");
    }
    const std::string file = name + ".pdt";
    write_tensor(dir / file, tensor);
    manifest[name] = file;
  }
  write_manifest(dir, manifest);
}

std::map<std::string, Tensor> read_collection(const std::filesystem::path& dir) {
  std::map<std::string, Tensor> items;
  for (const auto& [name, file] : read_manifest(dir)) items[name] = read_tensor(dir / file);
  return items;
}

}  // namespace phipd::io
