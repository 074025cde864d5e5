#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "tpgcn/dataset.hpp"
#include "tpgcn/layers.hpp"
#include "tpgcn/model.hpp"
#include "tpgcn/network_checks.hpp"
#include "tpgcn/sgc_reference.hpp"
#include "tpgcn/toy_data.hpp"

using namespace tpgcn;
using namespace tpgcn::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

void zero(Parameter<double>& p) { p.value().fill(0.0); }

// Swaps the two persons on the joint axis of [B, C, T, 2N].
Tensor<double> swap_persons(const Tensor<double>& x) {
  Tensor<double> out = x;
  const std::int64_t v = x.dim(3), n = v / 2, rows = x.numel() / v;
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t j = 0; j < v; ++j) out[r * v + j] = x[r * v + (j + n) % v];
  }
  return out;
}

ModelConfig small_config(GraphScaleMode mode, Strategy strategy) {
  ModelConfig mc = ModelConfig::toy(4);
  mc.mode = mode;
  mc.strategy = strategy;
  mc.frames = 16;
  return mc;
}

}  // namespace

TEST_CASE("matrix-form SGC equals the per-vertex oracle") {
  CHECK(sgc_oracle_gap<float>(1, 10) < 1e-5);
  CHECK(sgc_oracle_gap<double>(2, 10) < 1e-10);
}

TEST_CASE("per-vertex oracle on hand-checked cases") {
  SUBCASE("single vertex keeps the self transform") {
    const Tensor<double> x({1, 2, 1, 1}, std::vector<double>{3.0, -1.0});
    Tensor<double> w({3, 2, 1});
    w.at({0, 0, 0}) = 2.0;
    w.at({0, 1, 0}) = 1.0;
    w.at({1, 0, 0}) = 100.0;  // no neighbors, so hop rings stay silent
    const Tensor<double> out = sgc_reference<double>(x, Tensor<double>({1, 1}), 2, w);
    CHECK(out[0] == doctest::Approx(5.0));
  }
  SUBCASE("three-node path") {
    Tensor<double> a({3, 3});
    a.at({0, 1}) = a.at({1, 0}) = a.at({1, 2}) = a.at({2, 1}) = 1.0;
    const Tensor<double> x({1, 1, 1, 3}, std::vector<double>{1.0, 2.0, 4.0});
    Tensor<double> w({3, 1, 1}, 1.0);
    const Tensor<double> out = sgc_reference<double>(x, a, 2, w);
    // Vertex 0: self 1, one hop 2/sqrt(1*2), two hops 4/sqrt(1*1).
    CHECK(out[0] == doctest::Approx(1.0 + 2.0 / std::sqrt(2.0) + 4.0));
    // Vertex 1: self 2, hop-1 ring (1 + 4)/sqrt(2*1), no hop-2 partner.
    CHECK(out[1] == doctest::Approx(2.0 + 5.0 / std::sqrt(2.0)));
  }
}

TEST_CASE("SGC with the identity graph and identity transform is the identity") {
  std::mt19937_64 rng(1);
  SgcLayer<double> sgc("sgc", 3, 3, 1, 4, false, rng);
  Tensor<double>& w = sgc.transform().weight().value();
  w.fill(0.0);
  for (int c = 0; c < 3; ++c) w.at({c, c, 0}) = 1.0;
  sgc.transform().bias()->value().fill(0.0);
  const Tensor<double> x = random_tensor<double>({2, 3, 5, 4}, rng);
  const Tensor<double> eye = Tensor<double>::eye(4).reshaped({1, 4, 4});
  CHECK(max_abs_diff(sgc.forward(Var<double>(x), Var<double>(eye)).value(), x) == 0.0);
}

TEST_CASE("SGC output ignores a rescaled graph and commutes with person swaps") {
  const SkeletonTopology topo = SkeletonTopology::star6();
  std::mt19937_64 rng(2);
  const LabeledAdjacency adj = build_adjacency(Strategy::Pairwise, topo, 2, nullptr);
  Tensor<double> doubled = adj.subsets;
  for (std::int64_t i = 0; i < doubled.numel(); ++i) doubled[i] *= 2.0;
  SgcLayer<double> sgc("sgc", 3, 4, 3, 12, true, rng);
  const Tensor<double> x = random_tensor<double>({2, 3, 4, 12}, rng);
  const Tensor<double> y = sgc.forward(Var<double>(x), Var<double>(adj.normalized)).value();
  CHECK(max_abs_diff(y, sgc.forward(Var<double>(x), Var<double>(normalize(doubled))).value()) < 1e-12);
  const Tensor<double> ys = sgc.forward(Var<double>(swap_persons(x)), Var<double>(adj.normalized)).value();
  CHECK(max_abs_diff(ys, swap_persons(y)) < 1e-12);
}

TEST_CASE("temporal layers keep or halve the frame count") {
  std::mt19937_64 rng(3);
  for (std::int64_t t : {8, 9}) {
    const Tensor<double> x = random_tensor<double>({2, 8, t, 6}, rng);
    MsTcn<double> keep("keep", 8, 8, 1, true, rng), halve("halve", 8, 16, 2, true, rng);
    CHECK(keep.forward(Var<double>(x), true).shape() == Shape{2, 8, t, 6});
    CHECK(halve.forward(Var<double>(x), true).shape() == Shape{2, 16, (t + 1) / 2, 6});
  }
  CHECK_THROWS_AS(MsTcn<double>("odd", 8, 10, 1, true, rng), Error);
}

TEST_CASE("part attention bounds and closed form") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  std::mt19937_64 rng(4);
  StPartAtt<double> att("att", 8, topo, 2, rng);
  CHECK(att.parts() == 10);
  const Tensor<double> x = random_tensor<double>({2, 8, 6, 50}, rng);
  const Tensor<double> y = att.forward(Var<double>(x), true).value();
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(std::abs(y[i]) <= std::abs(x[i]));

  // Swapping two joints of the same part permutes the output the same way.
  int a = -1, b = -1;
  for (int j = 0; j < 25 && b < 0; ++j) {
    for (int k = j + 1; k < 25; ++k) {
      if (topo.part_of[static_cast<std::size_t>(j)] == topo.part_of[static_cast<std::size_t>(k)]) {
        a = j;
        b = k;
        break;
      }
    }
  }
  REQUIRE(b >= 0);
  auto swap_joints = [&](const Tensor<double>& t) {
    Tensor<double> out = t;
    const std::int64_t rows = t.numel() / 50;
    for (std::int64_t r = 0; r < rows; ++r) std::swap(out[r * 50 + a], out[r * 50 + b]);
    return out;
  };
  CHECK(max_abs_diff(att.forward(Var<double>(swap_joints(x)), false).value(), swap_joints(att.forward(Var<double>(x), false).value())) < 1e-12);

  zero(att.frame_fc().weight());
  zero(*att.frame_fc().bias());
  zero(att.part_fc().weight());
  zero(*att.part_fc().bias());
  const Tensor<double> quarter = att.forward(Var<double>(x), true).value();
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(quarter[i] == doctest::Approx(0.25 * x[i]));

  CHECK(code_of([&] { att.forward(Var<double>(random_tensor<double>({1, 8, 2, 12}, rng)), true); }) ==
        ErrorCode::PartMapIncomplete);
}

TEST_CASE("block shapes follow the channel plan") {
  const SkeletonTopology topo = SkeletonTopology::star6();
  const LabeledAdjacency adj = build_adjacency(Strategy::Physical, topo, 2, nullptr);
  std::mt19937_64 rng(5);
  Tensor<double> x = random_tensor<double>({2, 6, 16, 12}, rng);
  const ChannelPlan plan{{6, 8}, {8, 8}, {8, 16}, {16, 16}};
  const std::vector<std::int64_t> strides{1, 2, 2, 1};
  std::int64_t t = 16;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    BlockSpec spec;
    spec.in = plan[i].first;
    spec.out = plan[i].second;
    spec.stride = strides[i];
    spec.multiscale = i > 0;
    Block<double> block("b" + std::to_string(i), spec, 3, topo, 2, rng);
    x = block.forward(Var<double>(x), Var<double>(adj.normalized), true).value();
    t = (t + strides[i] - 1) / strides[i];
    CHECK(x.shape() == Shape{2, plan[i].second, t, 12});
  }
}

TEST_CASE("layer and model gradients match finite differences") {
  for (const auto& check : run_network_gradchecks(7)) {
    CAPTURE(check.name);
    CAPTURE(check.report.summary());
    CHECK(check.report.passed());
  }
}

TEST_CASE("parameter and FLOP accounting") {
  std::mt19937_64 rng(6);
  Linear<float> fc("fc", 10, 5, rng);
  CHECK(count_parameters<float>(fc) == 55);

  ModelConfig full;
  full.mode = GraphScaleMode::Mutual;
  Model<float> mutual(full);
  full.mode = GraphScaleMode::Symmetry;
  Model<float> symmetry(full);
  CHECK(mutual.count_params() >= 1'323'000);
  CHECK(mutual.count_params() <= 1'617'000);
  CHECK(mutual.count_params() == symmetry.count_params());
  CHECK(symmetry.estimate_flops() == 2 * mutual.estimate_flops());
  std::int64_t total = 0;
  for (auto* p : mutual.parameters()) total += p->numel();
  CHECK(total == mutual.count_params());
}

TEST_CASE("full-size forward shape and zero-input robustness") {
  ModelConfig mc;
  mc.strategy = Strategy::Physical;
  mc.mode = GraphScaleMode::Mutual;
  Model<float> model(mc);
  ModelInput<float> input;
  for (auto& s : input.streams) s = Var<float>(Tensor<float>({2, 6, 64, 50}));
  const auto logits = model.forward(input, false);
  CHECK(logits.shape() == Shape{2, 11});
  CHECK(logits.value().all_finite());
}

TEST_CASE("model configuration errors") {
  ModelConfig bad = ModelConfig::toy();
  bad.main_plan[0].first = 30;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigMismatch);
  ModelConfig strides = ModelConfig::toy();
  strides.main_strides.pop_back();
  CHECK(code_of([&] { strides.validate(); }) == ErrorCode::ConfigMismatch);

  const ModelConfig geo = small_config(GraphScaleMode::Mutual, Strategy::Geometric);
  Model<float> model(geo);
  ModelInput<float> input;
  for (auto& s : input.streams) s = Var<float>(Tensor<float>({1, 6, 16, 50}));
  CHECK(code_of([&] { model.forward(input, false); }) == ErrorCode::ConfigMismatch);

  ModelConfig round = ModelConfig::from_json(geo.to_json());
  CHECK(round.to_json() == geo.to_json());
  CHECK(ModelConfig::from_json(R"({"num_classes": 7})").num_classes == 7);
}

TEST_CASE("model state round trips and rejects mismatches") {
  const ModelConfig mc = small_config(GraphScaleMode::Mutual, Strategy::Physical);
  Model<float> a(mc);
  ModelConfig other_seed = mc;
  other_seed.seed = 99;
  Model<float> b(other_seed);
  b.load_state(a.state());
  ModelInput<float> input;
  std::mt19937_64 rng(8);
  for (auto& s : input.streams) s = Var<float>(random_tensor<float>({2, 6, 16, 50}, rng));
  CHECK(max_abs_diff(a.forward(input, false).value(), b.forward(input, false).value()) == 0.0);

  auto missing = a.state();
  missing.pop_back();
  CHECK(code_of([&] { b.load_state(missing); }) == ErrorCode::CheckpointMismatch);
  auto extra = a.state();
  extra.push_back({"unknown", Tensor<float>({1})});
  CHECK(code_of([&] { b.load_state(extra); }) == ErrorCode::CheckpointMismatch);
  auto reshaped = a.state();
  reshaped[0].value = Tensor<float>({1, 2, 3});
  CHECK(code_of([&] { b.load_state(reshaped); }) == ErrorCode::CheckpointMismatch);

  ModelConfig wider = mc;
  wider.num_classes = 5;
  Model<float> c(wider);
  CHECK(code_of([&] { c.load_state(a.state()); }) == ErrorCode::CheckpointMismatch);
}

TEST_CASE("symmetry mode logits ignore person order with a swap-symmetric graph") {
  const ModelConfig mc = small_config(GraphScaleMode::Symmetry, Strategy::Interactive);
  Model<float> model(mc);
  DatasetOptions opts;
  opts.features.mode = mc.mode;
  opts.features.strategy = mc.strategy;
  opts.frames = 16;
  const ToyDataset toy = make_toy_dataset(3, 4, 2, {16, 0.01});
  std::vector<SkeletonSequence> swapped;
  for (const auto& s : toy.sequences) swapped.push_back(swap_bodies(s));
  const Dataset plain = Dataset::from_sequences(toy.sequences, 4, opts);
  const Dataset flipped = Dataset::from_sequences(swapped, 4, opts);
  std::vector<const FeatureBundle*> pa, pb;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    pa.push_back(&plain.sample(i).bundle);
    pb.push_back(&flipped.sample(i).bundle);
  }
  const auto la = average_graph_logits(model.forward(make_input<float>(pa), false), 2).value();
  const auto lb = average_graph_logits(model.forward(make_input<float>(pb), false), 2).value();
  CHECK(max_abs_diff(la, lb) < 1e-5);
}
