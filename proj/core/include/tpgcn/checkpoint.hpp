#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tpgcn/tensor.hpp"

namespace tpgcn {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

/// Checkpoint layout (little-endian): "2PCK", u32 version, u32 count, then per
/// entry: u32 name length, name bytes, u8 dtype (0 = f32, 1 = f64), u32 rank,
/// u32 extents..., raw values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
std::string encode_checkpoint(const std::vector<NamedTensor<T>>& entries);
/// Values stored in the other precision are converted on load.
template <typename T>
std::vector<NamedTensor<T>> decode_checkpoint(std::string_view bytes);

template <typename T>
void save_checkpoint(const std::string& path, const std::vector<NamedTensor<T>>& entries);
template <typename T>
std::vector<NamedTensor<T>> load_checkpoint(const std::string& path);

}  // namespace tpgcn
