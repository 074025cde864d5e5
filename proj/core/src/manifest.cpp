#include "tpgcn/manifest.hpp"

#include <json.hpp>
#include <regex>
#include <unordered_set>

#include "detail/binary_io.hpp"
#include "tpgcn/error.hpp"

namespace tpgcn {

using nlohmann::json;

void DatasetManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.sample_id).second) fail(ErrorCode::InvalidArgument, "duplicate sample id " + e.sample_id);
    if (e.label >= num_classes) {
      fail(ErrorCode::ClassCountMismatch, "sample " + e.sample_id + " has label " + std::to_string(e.label) +
                                              " but num_classes is " + std::to_string(num_classes));
    }
  }
}

std::string DatasetManifest::to_json() const {
  json doc;
  doc["num_classes"] = num_classes;
  doc["joint_count"] = joint_count;
  doc["entries"] = json::array();
  for (const auto& e : entries) {
    doc["entries"].push_back({{"sample_id", e.sample_id},
                              {"path", e.path},
                              {"label", e.label},
                              {"subject_id", e.subject_id},
                              {"camera_id", e.camera_id},
                              {"setup_id", e.setup_id}});
  }
  return doc.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    DatasetManifest m;
    m.num_classes = doc.at("num_classes").get<std::uint32_t>();
    m.joint_count = doc.at("joint_count").get<std::uint32_t>();
    for (const auto& e : doc.at("entries")) {
      m.entries.push_back({e.at("sample_id").get<std::string>(), e.at("path").get<std::string>(),
                           e.at("label").get<std::uint32_t>(), e.value("subject_id", 0u), e.value("camera_id", 0u),
                           e.value("setup_id", 0u)});
    }
    m.validate();
    return m;
  } catch (const json::exception& ex) {
    fail(ErrorCode::InvalidArgument, std::string("manifest: ") + ex.what());
  }
}

void DatasetManifest::save(const std::string& path) const { detail::write_file(path, to_json()); }

DatasetManifest DatasetManifest::load(const std::string& path) { return from_json(detail::read_file(path)); }

SplitSpec SplitSpec::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    SplitSpec s;
    s.field = doc.at("field").get<std::string>();
    static const std::unordered_set<std::string> known{"sample_id", "subject_id", "camera_id", "setup_id", "label"};
    if (!known.contains(s.field)) fail(ErrorCode::InvalidArgument, "unknown split field " + s.field);
    for (const auto& v : doc.at("values")) s.values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return s;
  } catch (const json::exception& ex) {
    fail(ErrorCode::InvalidArgument, std::string("split file: ") + ex.what());
  }
}

SplitSpec SplitSpec::load(const std::string& path) { return from_json(detail::read_file(path)); }

bool SplitSpec::accepts(const ManifestEntry& entry) const {
  std::string key;
  if (field == "sample_id") key = entry.sample_id;
  else if (field == "subject_id") key = std::to_string(entry.subject_id);
  else if (field == "camera_id") key = std::to_string(entry.camera_id);
  else if (field == "setup_id") key = std::to_string(entry.setup_id);
  else if (field == "label") key = std::to_string(entry.label);
  for (const auto& v : values) {
    if (v == key) return true;
  }
  return false;
}

DatasetManifest filter_manifest(const DatasetManifest& manifest, const SplitSpec& split) {
  DatasetManifest out;
  out.num_classes = manifest.num_classes;
  out.joint_count = manifest.joint_count;
  for (const auto& e : manifest.entries) {
    if (split.accepts(e)) out.entries.push_back(e);
  }
  return out;
}

std::optional<NtuName> parse_ntu_name(const std::string& stem) {
  static const std::regex pattern(R"(S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3}))");
  std::smatch m;
  if (!std::regex_search(stem, m, pattern)) return std::nullopt;
  auto num = [&](int i) { return static_cast<std::uint32_t>(std::stoul(m[i].str())); };
  return NtuName{num(1), num(2), num(3), num(4), num(5)};
}

}  // namespace tpgcn
