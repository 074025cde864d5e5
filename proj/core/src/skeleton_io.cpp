#include "tpgcn/skeleton_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "detail/binary_io.hpp"
#include "detail/container.hpp"

namespace tpgcn {

namespace {

struct Line {
  std::string_view text;
  std::size_t number;  // 1-based
};

// Splits into non-blank lines, tolerating \r\n endings.
std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0, number = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t\r\f\v") != std::string_view::npos) lines.push_back({line, number});
    if (end == text.size()) break;
    start = end + 1;
    ++number;
  }
  return lines;
}

std::vector<std::string_view> split_any(std::string_view line, std::string_view separators) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    i = line.find_first_not_of(separators, i);
    if (i == std::string_view::npos) break;
    std::size_t j = line.find_first_of(separators, i);
    if (j == std::string_view::npos) j = line.size();
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void malformed(std::size_t line, std::string_view token) {
  fail(ErrorCode::MalformedNumber,
       "line " + std::to_string(line) + ": cannot parse '" + std::string(token.substr(0, 32)) + "'");
}

double parse_real(std::string_view token, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    malformed(line, token);
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view token, std::size_t line) {
  token = trim(token);
  Int v{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) malformed(line, token);
  return v;
}

class LineCursor {
 public:
  explicit LineCursor(std::vector<Line> lines) : lines_(std::move(lines)) {}

  const Line& next(const char* what) {
    if (pos_ >= lines_.size()) {
      fail(ErrorCode::TruncatedFile, std::string("expected ") + what + " after line " +
                                         std::to_string(lines_.empty() ? 0 : lines_.back().number));
    }
    return lines_[pos_++];
  }
  std::size_t remaining() const { return lines_.size() - pos_; }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

std::int64_t parse_count(const Line& line, const char* what) {
  const auto fields = split_any(line.text, " \t");
  if (fields.size() != 1) malformed(line.number, line.text);
  const auto v = parse_int<std::int64_t>(fields[0], line.number);
  if (v < 0) fail(ErrorCode::MalformedNumber, "line " + std::to_string(line.number) + ": negative " + what);
  return v;
}

constexpr int kNtuBodyInfoFields = 10;
constexpr int kNtuJointFields = 12;

}  // namespace

void SkeletonSequence::validate() const {
  if (data.rank() != 4) fail(ErrorCode::InvalidArgument, "sequence data must be [C,T,M,N], got " + shape_str(data.shape()));
  const auto c = channels(), t = frames(), m = bodies(), n = joints();
  if ((c != 2 && c != 3) || t < 1 || (m != 1 && m != 2) || (n != kSbuJoints && n != kNtuJoints)) {
    fail(ErrorCode::InvalidArgument, "unsupported sequence shape " + shape_str(data.shape()));
  }
  if (!data.all_finite()) fail(ErrorCode::InvalidArgument, "sequence " + meta.sample_id + " has non-finite values");
}

std::vector<RawFrame> parse_ntu_skeleton(std::string_view text) {
  LineCursor cursor(split_lines(text));
  const std::int64_t frame_count = parse_count(cursor.next("frame count"), "frame count");
  std::vector<RawFrame> frames;
  frames.reserve(static_cast<std::size_t>(std::min<std::int64_t>(frame_count, static_cast<std::int64_t>(cursor.remaining()))));
  for (std::int64_t f = 0; f < frame_count; ++f) {
    const std::int64_t body_count = parse_count(cursor.next("body count"), "body count");
    RawFrame frame;
    for (std::int64_t b = 0; b < body_count; ++b) {
      const Line& info = cursor.next("body info line");
      const auto info_fields = split_any(info.text, " \t");
      if (info_fields.size() != kNtuBodyInfoFields) malformed(info.number, info.text);
      RawBodyFrame body;
      body.body_id = parse_int<std::uint64_t>(info_fields[0], info.number);
      for (std::size_t i = 1; i < info_fields.size(); ++i) parse_real(info_fields[i], info.number);

      const Line& count_line = cursor.next("joint count");
      const std::int64_t joint_count = parse_count(count_line, "joint count");
      if (joint_count != kNtuJoints) {
        fail(ErrorCode::JointCountMismatch, "line " + std::to_string(count_line.number) + ": joint count " +
                                                std::to_string(joint_count) + ", expected 25");
      }
      body.joints.reserve(kNtuJoints);
      for (int j = 0; j < kNtuJoints; ++j) {
        const Line& jl = cursor.next("joint line");
        const auto fields = split_any(jl.text, " \t");
        if (fields.size() != kNtuJointFields) malformed(jl.number, jl.text);
        JointRecord joint;
        joint.x = parse_real(fields[0], jl.number);
        joint.y = parse_real(fields[1], jl.number);
        joint.z = parse_real(fields[2], jl.number);
        for (int k = 3; k < kNtuJointFields - 1; ++k) parse_real(fields[static_cast<std::size_t>(k)], jl.number);
        joint.tracking_state = parse_int<int>(fields[kNtuJointFields - 1], jl.number);
        body.joints.push_back(joint);
      }
      frame.push_back(std::move(body));
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

SkeletonSequence parse_sbu(std::string_view text, const SequenceMeta& meta, const SbuLayout& layout) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorCode::InvalidArgument, "empty SBU file");
  const auto frames = static_cast<std::int64_t>(lines.size());
  SkeletonSequence seq;
  seq.meta = meta;
  seq.data = Tensor<float>({layout.channels, frames, layout.persons, layout.joints});
  for (std::int64_t t = 0; t < frames; ++t) {
    const Line& line = lines[static_cast<std::size_t>(t)];
    const auto fields = split_any(line.text, ",");
    if (fields.size() != layout.fields_per_line()) {
      fail(ErrorCode::FieldCountMismatch, "line " + std::to_string(line.number) + ": " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(layout.fields_per_line()));
    }
    parse_real(fields[0], line.number);
    std::size_t f = 1;
    for (int m = 0; m < layout.persons; ++m) {
      for (int n = 0; n < layout.joints; ++n) {
        for (int c = 0; c < layout.channels; ++c) {
          seq.data.at({c, t, m, n}) = static_cast<float>(parse_real(fields[f++], line.number));
        }
      }
    }
  }
  return seq;
}

SkeletonSequence to_sequence(const std::vector<RawFrame>& frames, const SequenceMeta& meta) {
  if (frames.empty()) fail(ErrorCode::InvalidArgument, "capture has no frames");
  std::unordered_map<std::uint64_t, int> slot_of;
  std::int64_t joints = 0;
  for (const auto& frame : frames) {
    for (const auto& body : frame) {
      if (!slot_of.contains(body.body_id)) {
        if (slot_of.size() == 2) {
          fail(ErrorCode::TooManyBodies, "capture " + meta.sample_id + " has more than 2 distinct bodies");
        }
        slot_of.emplace(body.body_id, static_cast<int>(slot_of.size()));
      }
      const auto n = static_cast<std::int64_t>(body.joints.size());
      if (joints == 0) joints = n;
      if (n != joints) fail(ErrorCode::JointCountMismatch, "bodies disagree on joint count");
    }
  }
  if (joints == 0) joints = kNtuJoints;
  SkeletonSequence seq;
  seq.meta = meta;
  const auto t_count = static_cast<std::int64_t>(frames.size());
  seq.data = Tensor<float>({3, t_count, 2, joints});
  for (std::int64_t t = 0; t < t_count; ++t) {
    for (const auto& body : frames[static_cast<std::size_t>(t)]) {
      const int m = slot_of.at(body.body_id);
      for (std::int64_t n = 0; n < joints; ++n) {
        const auto& j = body.joints[static_cast<std::size_t>(n)];
        seq.data.at({0, t, m, n}) = static_cast<float>(j.x);
        seq.data.at({1, t, m, n}) = static_cast<float>(j.y);
        seq.data.at({2, t, m, n}) = static_cast<float>(j.z);
      }
    }
  }
  return seq;
}

SkeletonSequence resample_temporal(const SkeletonSequence& seq, std::int64_t target_frames, ResampleMode mode) {
  if (target_frames < 1) fail(ErrorCode::InvalidArgument, "target frame count must be >= 1");
  const std::int64_t c_count = seq.channels(), t_count = seq.frames();
  const std::int64_t plane = seq.bodies() * seq.joints();
  if (t_count < 1) fail(ErrorCode::InvalidArgument, "cannot resample an empty sequence");
  SkeletonSequence out;
  out.meta = seq.meta;
  out.data = Tensor<float>({c_count, target_frames, seq.bodies(), seq.joints()});
  const float* src = seq.data.data();
  float* dst = out.data.data();
  if (mode == ResampleMode::Pad) {
    if (t_count > target_frames) {
      fail(ErrorCode::PadOverflow, std::to_string(t_count) + " frames do not fit in " + std::to_string(target_frames));
    }
    for (std::int64_t c = 0; c < c_count; ++c) {
      std::copy_n(src + c * t_count * plane, t_count * plane, dst + c * target_frames * plane);
    }
    return out;
  }
  for (std::int64_t i = 0; i < target_frames; ++i) {
    const double pos = target_frames == 1 ? 0.0
                                          : static_cast<double>(i) * static_cast<double>(t_count - 1) /
                                                static_cast<double>(target_frames - 1);
    const auto lo = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(pos)), t_count - 1);
    const auto hi = std::min<std::int64_t>(lo + 1, t_count - 1);
    const double w = pos - static_cast<double>(lo);
    for (std::int64_t c = 0; c < c_count; ++c) {
      const float* a = src + (c * t_count + lo) * plane;
      const float* b = src + (c * t_count + hi) * plane;
      float* o = dst + (c * target_frames + i) * plane;
      for (std::int64_t k = 0; k < plane; ++k) {
        o[k] = w == 0.0 ? a[k] : static_cast<float>((1.0 - w) * a[k] + w * b[k]);
      }
    }
  }
  return out;
}

namespace detail {

std::string encode_container(const ContainerRecord& record) {
  if (record.data.rank() != 4) fail(ErrorCode::InvalidArgument, "container payload must be rank 4");
  ByteWriter w;
  w.bytes(kContainerMagic);
  w.u32(record.version);
  for (auto d : record.data.shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(record.label);
  w.u32(record.subject_id);
  w.u32(record.camera_id);
  w.u32(record.setup_id);
  if (record.version >= 2) w.u32(record.branch_tag.value_or(0));
  for (float v : record.data.values()) w.f32(v);
  return w.take();
}

ContainerRecord decode_container(std::string_view bytes, std::size_t& offset) {
  std::string_view rest = bytes.substr(std::min(offset, bytes.size()));
  if (rest.size() < kContainerMagic.size() || rest.substr(0, kContainerMagic.size()) != kContainerMagic) {
    fail(ErrorCode::BadMagic, "missing 2PGC magic");
  }
  ByteReader r(rest.substr(kContainerMagic.size()));
  ContainerRecord record;
  record.version = r.u32();
  if (record.version != 1 && record.version != 2) {
    fail(ErrorCode::UnsupportedVersion, "container version " + std::to_string(record.version));
  }
  Shape shape(4);
  for (auto& d : shape) d = r.u32();
  record.label = r.u32();
  record.subject_id = r.u32();
  record.camera_id = r.u32();
  record.setup_id = r.u32();
  if (record.version == 2) record.branch_tag = r.u32();
  const std::uint64_t available = r.remaining() / 4;
  std::uint64_t count = std::all_of(shape.begin(), shape.end(), [](auto d) { return d > 0; }) ? 1 : 0;
  for (auto d : shape) {
    if (count == 0) break;
    if (count > available / static_cast<std::uint64_t>(d)) {
      fail(ErrorCode::LengthMismatch, "payload " + shape_str(shape) + " exceeds the " + std::to_string(available) +
                                          " floats in the file");
    }
    count *= static_cast<std::uint64_t>(d);
  }
  std::vector<float> values(count);
  for (auto& v : values) v = r.f32();
  record.data = Tensor<float>(std::move(shape), std::move(values));
  offset += kContainerMagic.size() + r.position();
  return record;
}

}  // namespace detail

std::string write_canonical(const SkeletonSequence& seq) {
  detail::ContainerRecord record;
  record.version = kCanonicalVersion;
  record.label = seq.meta.label;
  record.subject_id = seq.meta.subject_id;
  record.camera_id = seq.meta.camera_id;
  record.setup_id = seq.meta.setup_id;
  record.data = seq.data;
  return detail::encode_container(record);
}

SkeletonSequence read_canonical(std::string_view bytes, std::string sample_id) {
  std::size_t offset = 0;
  auto record = detail::decode_container(bytes, offset);
  if (record.version != kCanonicalVersion) {
    fail(ErrorCode::UnsupportedVersion, "expected a version 1 sequence, got version " + std::to_string(record.version));
  }
  if (offset != bytes.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(bytes.size() - offset) + " trailing bytes after payload");
  }
  SkeletonSequence seq;
  seq.data = std::move(record.data);
  seq.meta = {std::move(sample_id), record.label, record.subject_id, record.camera_id, record.setup_id};
  return seq;
}

void save_sequence(const std::string& path, const SkeletonSequence& seq) {
  detail::write_file(path, write_canonical(seq));
}

SkeletonSequence load_sequence(const std::string& path, std::string sample_id) {
  return read_canonical(detail::read_file(path), std::move(sample_id));
}

}  // namespace tpgcn
