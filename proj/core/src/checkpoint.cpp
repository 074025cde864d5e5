#include "tpgcn/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "detail/binary_io.hpp"

namespace tpgcn {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path);
}

}  // namespace detail

namespace {
constexpr std::string_view kMagic = "2PCK";
}

template <typename T>
std::string encode_checkpoint(const std::vector<NamedTensor<T>>& entries) {
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name);
    w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (T v : e.value.values()) {
      if constexpr (std::is_same_v<T, float>) {
        w.f32(v);
      } else {
        w.f64(v);
      }
    }
  }
  return w.take();
}

template <typename T>
std::vector<NamedTensor<T>> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    fail(ErrorCode::BadMagic, "not a checkpoint file");
  }
  detail::ByteReader r(bytes.substr(kMagic.size()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::UnsupportedVersion, "checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor<T>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor<T> e;
    const std::uint32_t len = r.u32();
    e.name = std::string(r.bytes(len));
    const std::uint8_t dtype = r.u8();
    if (dtype > 1) fail(ErrorCode::UnsupportedVersion, "unknown dtype tag " + std::to_string(dtype));
    const std::uint32_t rank = r.u32();
    if (rank > 8) fail(ErrorCode::LengthMismatch, "implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::int64_t n = numel(shape);
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (static_cast<std::uint64_t>(n) * width > r.remaining()) {
      fail(ErrorCode::LengthMismatch, "entry " + e.name + " payload exceeds file");
    }
    std::vector<T> values(static_cast<std::size_t>(n));
    for (auto& v : values) v = dtype == 0 ? static_cast<T>(r.f32()) : static_cast<T>(r.f64());
    e.value = Tensor<T>(std::move(shape), std::move(values));
    out.push_back(std::move(e));
  }
  if (r.remaining() != 0) fail(ErrorCode::LengthMismatch, "trailing bytes after checkpoint entries");
  return out;
}

template <typename T>
void save_checkpoint(const std::string& path, const std::vector<NamedTensor<T>>& entries) {
  detail::write_file(path, encode_checkpoint(entries));
}

template <typename T>
std::vector<NamedTensor<T>> load_checkpoint(const std::string& path) {
  return decode_checkpoint<T>(detail::read_file(path));
}

template std::string encode_checkpoint(const std::vector<NamedTensor<float>>&);
template std::string encode_checkpoint(const std::vector<NamedTensor<double>>&);
template std::vector<NamedTensor<float>> decode_checkpoint(std::string_view);
template std::vector<NamedTensor<double>> decode_checkpoint(std::string_view);
template void save_checkpoint(const std::string&, const std::vector<NamedTensor<float>>&);
template void save_checkpoint(const std::string&, const std::vector<NamedTensor<double>>&);
template std::vector<NamedTensor<float>> load_checkpoint(const std::string&);
template std::vector<NamedTensor<double>> load_checkpoint(const std::string&);

}  // namespace tpgcn
