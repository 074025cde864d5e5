#include "tpgcn/model_config.hpp"

#include <json.hpp>

#include "detail/binary_io.hpp"
#include "tpgcn/error.hpp"

namespace tpgcn {

using nlohmann::json;

namespace {

json plan_to_json(const ChannelPlan& plan) {
  json arr = json::array();
  for (const auto& [in, out] : plan) arr.push_back({in, out});
  return arr;
}

ChannelPlan plan_from_json(const json& arr) {
  ChannelPlan plan;
  for (const auto& p : arr) plan.emplace_back(p.at(0).get<std::int64_t>(), p.at(1).get<std::int64_t>());
  return plan;
}

void check_chain(const ChannelPlan& plan, const char* what) {
  if (plan.empty()) fail(ErrorCode::ConfigMismatch, std::string(what) + " plan is empty");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].first < 1 || plan[i].second < 1) fail(ErrorCode::ConfigMismatch, std::string(what) + " plan has a non-positive width");
    if (i > 0 && plan[i].first != plan[i - 1].second) {
      fail(ErrorCode::ConfigMismatch, std::string(what) + " block " + std::to_string(i) + " expects " +
                                          std::to_string(plan[i].first) + " channels but receives " +
                                          std::to_string(plan[i - 1].second));
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  check_chain(input_plan, "input");
  check_chain(main_plan, "main");
  if (num_classes < 1) fail(ErrorCode::ConfigMismatch, "num_classes must be positive");
  if (input_plan.front().first != 2 * coord_channels) {
    fail(ErrorCode::ConfigMismatch, "first input block takes " + std::to_string(input_plan.front().first) +
                                        " channels, streams carry " + std::to_string(2 * coord_channels));
  }
  if (4 * input_plan.back().second != main_plan.front().first) {
    fail(ErrorCode::ConfigMismatch, "4 x " + std::to_string(input_plan.back().second) + " fused channels != " +
                                        std::to_string(main_plan.front().first));
  }
  if (main_strides.size() != main_plan.size()) {
    fail(ErrorCode::ConfigMismatch, "main_strides has " + std::to_string(main_strides.size()) + " entries for " +
                                        std::to_string(main_plan.size()) + " blocks");
  }
  for (auto s : main_strides) {
    if (s < 1) fail(ErrorCode::ConfigMismatch, "temporal strides must be >= 1");
  }
  for (std::size_t i = 1; i < input_plan.size(); ++i) {
    if (input_plan[i].second % 4 != 0) fail(ErrorCode::ConfigMismatch, "multi-scale widths must be divisible by 4");
  }
  for (const auto& [in, out] : main_plan) {
    if (out % 4 != 0) fail(ErrorCode::ConfigMismatch, "multi-scale widths must be divisible by 4");
  }
  if (adjacency.max_hop < 1) fail(ErrorCode::ConfigMismatch, "max_hop must be >= 1");
  if (joint_count != kNtuJoints && joint_count != kSbuJoints && joint_count != 6) {
    fail(ErrorCode::ConfigMismatch, "no topology for " + std::to_string(joint_count) + " joints");
  }
}

std::string ModelConfig::to_json() const {
  json doc;
  doc["num_classes"] = num_classes;
  doc["joint_count"] = joint_count;
  doc["coord_channels"] = coord_channels;
  doc["frames"] = frames;
  doc["strategy"] = to_string(strategy);
  doc["mode"] = to_string(mode);
  doc["max_hop"] = adjacency.max_hop;
  doc["geometric_threshold"] = adjacency.geometric_threshold;
  doc["geometric_keep_bones"] = adjacency.geometric_keep_bones;
  doc["interactive_cross_hands"] = adjacency.interactive_cross_hands;
  doc["input_plan"] = plan_to_json(input_plan);
  doc["main_plan"] = plan_to_json(main_plan);
  doc["main_strides"] = main_strides;
  doc["attention"] = attention;
  doc["edge_mask"] = edge_mask;
  doc["seed"] = seed;
  return doc.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json doc = json::parse(text);
    c.num_classes = doc.value("num_classes", c.num_classes);
    c.joint_count = doc.value("joint_count", c.joint_count);
    c.coord_channels = doc.value("coord_channels", c.coord_channels);
    c.frames = doc.value("frames", c.frames);
    if (doc.contains("strategy")) c.strategy = parse_strategy(doc.at("strategy").get<std::string>());
    if (doc.contains("mode")) c.mode = parse_graph_scale(doc.at("mode").get<std::string>());
    c.adjacency.max_hop = doc.value("max_hop", c.adjacency.max_hop);
    c.adjacency.geometric_threshold = doc.value("geometric_threshold", c.adjacency.geometric_threshold);
    c.adjacency.geometric_keep_bones = doc.value("geometric_keep_bones", c.adjacency.geometric_keep_bones);
    c.adjacency.interactive_cross_hands = doc.value("interactive_cross_hands", c.adjacency.interactive_cross_hands);
    if (doc.contains("input_plan")) c.input_plan = plan_from_json(doc.at("input_plan"));
    if (doc.contains("main_plan")) c.main_plan = plan_from_json(doc.at("main_plan"));
    if (doc.contains("main_strides")) c.main_strides = doc.at("main_strides").get<std::vector<std::int64_t>>();
    c.attention = doc.value("attention", c.attention);
    c.edge_mask = doc.value("edge_mask", c.edge_mask);
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& ex) {
    fail(ErrorCode::InvalidArgument, std::string("model config: ") + ex.what());
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::string& path) { return from_json(detail::read_file(path)); }

void ModelConfig::save(const std::string& path) const { detail::write_file(path, to_json()); }

ModelConfig ModelConfig::toy(std::uint32_t classes) {
  ModelConfig c;
  c.num_classes = classes;
  c.mode = GraphScaleMode::Mutual;
  c.input_plan = {{6, 16}, {16, 16}, {16, 8}};
  c.main_plan = {{32, 32}, {32, 64}, {64, 64}};
  c.main_strides = {2, 2, 1};
  return c;
}

}  // namespace tpgcn
