#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tpgcn {

struct ManifestEntry {
  std::string sample_id;
  std::string path;
  std::uint32_t label = 0;
  std::uint32_t subject_id = 0;
  std::uint32_t camera_id = 0;
  std::uint32_t setup_id = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint32_t num_classes = 0;
  std::uint32_t joint_count = 0;

  /// Unique sample ids and every label below num_classes.
  void validate() const;
  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Benchmark split: keep entries whose `field` value is listed. Field is one of
/// sample_id, subject_id, camera_id, setup_id, label.
struct SplitSpec {
  std::string field;
  std::vector<std::string> values;

  static SplitSpec from_json(const std::string& text);
  static SplitSpec load(const std::string& path);
  bool accepts(const ManifestEntry& entry) const;
};

DatasetManifest filter_manifest(const DatasetManifest& manifest, const SplitSpec& split);

/// Fields of an NTU file stem such as S001C002P003R002A050.
struct NtuName {
  std::uint32_t setup = 0, camera = 0, performer = 0, replication = 0, action = 0;
};
std::optional<NtuName> parse_ntu_name(const std::string& stem);

}  // namespace tpgcn
