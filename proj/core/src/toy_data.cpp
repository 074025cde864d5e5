#include "tpgcn/toy_data.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "tpgcn/topology.hpp"

namespace tpgcn {

namespace {

using Pose = std::array<std::array<double, 3>, kNtuJoints>;  // forward, up, left (meters)

// Upright rest pose, facing +forward, on the 25-joint layout.
Pose rest_pose() {
  Pose p{};
  auto set = [&](int j, double f, double u, double l) { p[static_cast<std::size_t>(j)] = {f, u, l}; };
  set(0, 0.0, 1.00, 0.0);
  set(1, 0.0, 1.25, 0.0);
  set(2, 0.0, 1.50, 0.0);
  set(3, 0.0, 1.65, 0.0);
  set(20, 0.0, 1.45, 0.0);
  set(4, 0.0, 1.42, 0.18);
  set(5, 0.0, 1.15, 0.22);
  set(6, 0.0, 0.90, 0.22);
  set(7, 0.0, 0.83, 0.22);
  set(21, 0.0, 0.76, 0.22);
  set(22, 0.03, 0.83, 0.20);
  set(8, 0.0, 1.42, -0.18);
  set(9, 0.0, 1.15, -0.22);
  set(10, 0.0, 0.90, -0.22);
  set(11, 0.0, 0.83, -0.22);
  set(23, 0.0, 0.76, -0.22);
  set(24, 0.03, 0.83, -0.20);
  set(12, 0.0, 0.95, 0.10);
  set(13, 0.0, 0.50, 0.10);
  set(14, 0.0, 0.08, 0.10);
  set(15, 0.10, 0.02, 0.10);
  set(16, 0.0, 0.95, -0.10);
  set(17, 0.0, 0.50, -0.10);
  set(18, 0.0, 0.08, -0.10);
  set(19, 0.10, 0.02, -0.10);
  return p;
}

// Strictly increasing on [0, 1] with ends 0 and 1.
double ramp(double u) { return 0.5 * u + 0.5 * (3.0 * u * u - 2.0 * u * u * u); }

// Rotates the right leg forward by `angle` radians about the hip.
void swing_right_leg(Pose& p, double angle) {
  const auto hip = p[16];
  const double s = std::sin(angle), c = std::cos(angle);
  auto place = [&](int j, double length) {
    p[static_cast<std::size_t>(j)] = {hip[0] + length * s, hip[1] - length * c, hip[2]};
  };
  place(17, 0.45);
  place(18, 0.87);
  p[19] = {p[18][0] + 0.10 * c, p[18][1] + 0.10 * s, hip[2]};
}

// Extends the right arm forward to `reach`, hand raised by `lift`.
void extend_right_arm(Pose& p, double reach, double lift) {
  const double h = 1.25 + lift;
  p[9] = {0.5 * reach, 0.5 * (1.42 + h), -0.12};
  p[10] = {reach - 0.05, h, -0.04};
  p[11] = {reach, h, -0.02};
  p[23] = {reach + 0.05, h, 0.0};
  p[24] = {reach - 0.02, h + 0.03, 0.0};
}

}  // namespace

ToyDataset make_toy_dataset(std::uint64_t seed, int classes, int samples_per_class, ToyOptions options) {
  if (classes < 1 || classes > 4 || samples_per_class < 1 || options.frames < 2) {
    fail(ErrorCode::InvalidArgument, "toy dataset needs 1..4 classes, >= 1 sample per class and >= 2 frames");
  }
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::int64_t frames = options.frames;
  const Pose rest = rest_pose();

  ToyDataset out;
  out.manifest.num_classes = static_cast<std::uint32_t>(classes);
  out.manifest.joint_count = kNtuJoints;
  int index = 0;
  for (int s = 0; s < samples_per_class; ++s) {
    for (int label = 0; label < classes; ++label, ++index) {
      const double ox = uni(-0.3, 0.3), depth = uni(2.5, 3.5);
      const std::array<double, 2> scale{uni(0.9, 1.1), uni(0.9, 1.1)};
      const double near = uni(0.6, 1.0), far = uni(1.8, 2.4), still = uni(0.9, 1.2), meet = uni(0.6, 0.8);
      const double kick_start = uni(0.15, 0.35), kick_len = uni(0.3, 0.45), kick_max = uni(0.9, 1.3);
      const double freq = uni(2.0, 4.0), amp = uni(0.08, 0.15), phase = uni(0.0, 2.0 * std::numbers::pi);
      const double sway = uni(0.0, 0.03), sway_freq = uni(0.5, 1.5);

      SkeletonSequence seq;
      seq.data = Tensor<float>({3, frames, 2, kNtuJoints});
      seq.meta.sample_id = "toy" + std::to_string(seed) + "_" + std::to_string(index);
      seq.meta.label = static_cast<std::uint32_t>(label);
      seq.meta.subject_id = static_cast<std::uint32_t>(s);
      seq.meta.setup_id = static_cast<std::uint32_t>(seed & 0xffffffffu);
      for (std::int64_t t = 0; t < frames; ++t) {
        const double u = static_cast<double>(t) / static_cast<double>(frames - 1);
        double d = still;
        if (label == 0) d = far + (near - far) * ramp(u);
        if (label == 1) d = near + (far - near) * ramp(u);
        if (label == 3) d = meet;
        for (int m = 0; m < 2; ++m) {
          Pose p = rest;
          const double arm_sway = sway * std::sin(2.0 * std::numbers::pi * sway_freq * u + m);
          for (int j : {5, 6, 7, 9, 10, 11, 21, 22, 23, 24}) p[static_cast<std::size_t>(j)][0] += arm_sway;
          if (label == 2 && m == 0) {
            const double k = (u - kick_start) / kick_len;
            if (k > 0.0 && k < 1.0) swing_right_leg(p, kick_max * std::sin(std::numbers::pi * k));
          }
          if (label == 3) {
            extend_right_arm(p, 0.5 * d - 0.04, amp * std::sin(2.0 * std::numbers::pi * freq * u + phase));
          }
          // Body 0 stands on the left facing +x, body 1 on the right facing -x.
          const double dir = m == 0 ? 1.0 : -1.0;
          const double cx = ox - dir * 0.5 * d;
          for (int j = 0; j < kNtuJoints; ++j) {
            const auto& q = p[static_cast<std::size_t>(j)];
            const std::array<double, 3> world{cx + dir * q[0], scale[static_cast<std::size_t>(m)] * q[1], depth + dir * q[2]};
            for (int c = 0; c < 3; ++c) {
              seq.data.at({c, t, m, j}) = static_cast<float>(world[static_cast<std::size_t>(c)] + options.noise * noise(rng));
            }
          }
        }
      }
      out.manifest.entries.push_back({seq.meta.sample_id, seq.meta.sample_id + ".2pgc", seq.meta.label,
                                      seq.meta.subject_id, seq.meta.camera_id, seq.meta.setup_id});
      out.sequences.push_back(std::move(seq));
    }
  }
  return out;
}

std::vector<double> center_distance(const SkeletonSequence& seq) {
  const SkeletonTopology topo = SkeletonTopology::for_joint_count(static_cast<int>(seq.joints()));
  std::vector<double> out;
  for (std::int64_t t = 0; t < seq.frames(); ++t) {
    double s = 0.0;
    for (std::int64_t c = 0; c < seq.channels(); ++c) {
      const double diff = seq.data.at({c, t, 0, topo.center_joint}) - seq.data.at({c, t, 1, topo.center_joint});
      s += diff * diff;
    }
    out.push_back(std::sqrt(s));
  }
  return out;
}

void write_toy_dataset(const ToyDataset& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    save_sequence((std::filesystem::path(dir) / data.manifest.entries[i].path).string(), data.sequences[i]);
  }
  data.manifest.save((std::filesystem::path(dir) / "manifest.json").string());
}

}  // namespace tpgcn
