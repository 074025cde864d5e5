#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tpgcn/tensor.hpp"

namespace tpgcn::detail {

inline constexpr std::string_view kContainerMagic = "2PGC";

/// Header fields of the "2PGC" container. Version 2 adds a branch tag after setup_id.
struct ContainerRecord {
  std::uint32_t version = 1;
  std::uint32_t label = 0;
  std::uint32_t subject_id = 0;
  std::uint32_t camera_id = 0;
  std::uint32_t setup_id = 0;
  std::optional<std::uint32_t> branch_tag;
  Tensor<float> data;  // rank 4
};

std::string encode_container(const ContainerRecord& record);
/// Decodes one record starting at `offset`; advances offset past it.
ContainerRecord decode_container(std::string_view bytes, std::size_t& offset);

}  // namespace tpgcn::detail
