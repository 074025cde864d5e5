#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tpgcn/tensor.hpp"

namespace tpgcn {

struct JointRecord {
  double x = 0.0, y = 0.0, z = 0.0;  // meters
  int tracking_state = 0;
};

struct RawBodyFrame {
  std::uint64_t body_id = 0;
  std::vector<JointRecord> joints;
};

/// Bodies present in one captured frame, in file order.
using RawFrame = std::vector<RawBodyFrame>;

inline constexpr int kNtuJoints = 25;
inline constexpr int kSbuJoints = 15;

struct SequenceMeta {
  std::string sample_id;
  std::uint32_t label = 0;
  std::uint32_t subject_id = 0;
  std::uint32_t camera_id = 0;
  std::uint32_t setup_id = 0;

  friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

/// Canonical multi-body capture: data is [C, T, M, N]; absent bodies are zeros.
struct SkeletonSequence {
  Tensor<float> data;
  SequenceMeta meta;

  std::int64_t channels() const { return data.dim(0); }
  std::int64_t frames() const { return data.dim(1); }
  std::int64_t bodies() const { return data.dim(2); }
  std::int64_t joints() const { return data.dim(3); }

  /// Throws InvalidArgument unless C in {2,3}, M in {1,2}, N in {15,25}, T >= 1, all finite.
  void validate() const;

  friend bool operator==(const SkeletonSequence&, const SkeletonSequence&) = default;
};

/// Parses the NTU RGB+D text layout. Keeps (x, y, z) and the tracking state of
/// every joint; depth, color and orientation fields are dropped.
std::vector<RawFrame> parse_ntu_skeleton(std::string_view text);

struct SbuLayout {
  int persons = 2;
  int joints = kSbuJoints;
  int channels = 3;
  std::size_t fields_per_line() const { return 1 + static_cast<std::size_t>(persons * joints * channels); }
};

/// One line per frame: frame index then persons x joints x channels values,
/// comma separated, person-major then joint then coordinate.
SkeletonSequence parse_sbu(std::string_view text, const SequenceMeta& meta = {}, const SbuLayout& layout = {});

/// Assigns bodies to slots 0/1 by first appearance of body_id; M = 2 always.
SkeletonSequence to_sequence(const std::vector<RawFrame>& frames, const SequenceMeta& meta);

enum class ResampleMode { Interpolate, Pad };

SkeletonSequence resample_temporal(const SkeletonSequence& seq, std::int64_t target_frames, ResampleMode mode);

/// Binary container (little-endian): "2PGC", u32 version = 1, u32 C, T, M, N,
/// label, subject_id, camera_id, setup_id, then C*T*M*N f32 in [C][T][M][N] order.
/// The sample id is not part of the payload; callers carry it in the manifest.
inline constexpr std::uint32_t kCanonicalVersion = 1;
std::string write_canonical(const SkeletonSequence& seq);
SkeletonSequence read_canonical(std::string_view bytes, std::string sample_id = {});

void save_sequence(const std::string& path, const SkeletonSequence& seq);
SkeletonSequence load_sequence(const std::string& path, std::string sample_id = {});

}  // namespace tpgcn
