#include "tpgcn/network_checks.hpp"

#include <random>

#include "tpgcn/layers.hpp"
#include "tpgcn/model.hpp"

namespace tpgcn {

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor<double> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

// Weighted sum of the output so every element carries a distinct gradient.
struct Probe {
  Tensor<double> weights;
  Var<double> operator()(const Var<double>& out) const { return ops::sum_all(ops::mul(out, ops::constant(weights))); }
};

template <typename L>
NamedGradCheck check_layer(const std::string& name, L& layer, Parameter<double>& input,
                           const std::function<Var<double>(const Var<double>&)>& forward, std::mt19937_64& rng,
                           GradCheckOptions options) {
  const Probe probe{random_tensor(forward(input.var()).shape(), rng)};
  std::vector<Parameter<double>*> params = collect_parameters<double>(layer);
  params.push_back(&input);
  return {name, grad_check([&] { return probe(forward(input.var())); }, params, options)};
}

}  // namespace

std::vector<NamedGradCheck> run_network_gradchecks(std::uint64_t seed, GradCheckOptions options,
                                                   std::int64_t max_checks_for_model) {
  std::mt19937_64 rng(seed);
  const SkeletonTopology topo = SkeletonTopology::star6();
  const int persons = 2;
  const std::int64_t batch = 2, frames = 8, v = persons * topo.joint_count;
  const Tensor<double> adjacency = build_adjacency(Strategy::Physical, topo, persons, nullptr).normalized;
  const Var<double> adj = ops::constant(adjacency);
  std::vector<NamedGradCheck> out;

  {
    SgcLayer<double> sgc("sgc", 3, 4, adjacency.dim(0), v, true, rng);
    // Perturb the mask so its gradient is exercised away from the all-ones start.
    for (std::int64_t i = 0; i < sgc.edge_mask()->numel(); ++i) sgc.edge_mask()->value()[i] += 0.1 * std::sin(static_cast<double>(i));
    Parameter<double> x("input", random_tensor({batch, 3, frames, v}, rng));
    out.push_back(check_layer("sgc", sgc, x, [&](const Var<double>& in) { return sgc.forward(in, adj); }, rng, options));
  }
  {
    MsTcn<double> tcn("mstcn", 8, 8, 2, true, rng);
    Parameter<double> x("input", random_tensor({batch, 8, frames, v}, rng));
    out.push_back(check_layer("ms_tcn", tcn, x, [&](const Var<double>& in) { return tcn.forward(in, true); }, rng, options));
  }
  {
    StPartAtt<double> att("att", 8, topo, persons, rng);
    Parameter<double> x("input", random_tensor({batch, 8, frames, v}, rng));
    out.push_back(check_layer("st_part_att", att, x, [&](const Var<double>& in) { return att.forward(in, true); }, rng, options));
  }
  {
    BlockSpec spec;
    spec.in = 4;
    spec.out = 8;
    spec.stride = 2;
    Block<double> block("block", spec, adjacency.dim(0), topo, persons, rng);
    Parameter<double> x("input", random_tensor({batch, 4, frames, v}, rng));
    out.push_back(check_layer("block", block, x, [&](const Var<double>& in) { return block.forward(in, adj, true); }, rng, options));
  }
  {
    ModelConfig mc;
    mc.num_classes = 3;
    mc.joint_count = topo.joint_count;
    mc.frames = frames;
    mc.strategy = Strategy::Physical;
    mc.mode = GraphScaleMode::Mutual;
    mc.input_plan = {{6, 8}, {8, 8}, {8, 4}};
    mc.main_plan = {{16, 16}, {16, 16}};
    mc.main_strides = {2, 1};
    mc.seed = seed;
    Model<double> model(mc);
    ModelInput<double> input;
    std::vector<Parameter<double>*> params = model.parameters();
    std::vector<std::unique_ptr<Parameter<double>>> streams;
    for (std::size_t b = 0; b < 4; ++b) {
      streams.push_back(std::make_unique<Parameter<double>>("stream" + std::to_string(b), random_tensor({batch, 6, frames, v}, rng)));
      params.push_back(streams.back().get());
    }
    const Probe probe{random_tensor({batch, 3}, rng)};
    GradCheckOptions model_options = options;
    model_options.max_checks_per_parameter = max_checks_for_model;
    auto fn = [&] {
      for (std::size_t b = 0; b < 4; ++b) input.streams[b] = streams[b]->var();
      return probe(model.forward(input, true));
    };
    out.push_back({"tiny_model", grad_check(fn, params, model_options)});
  }
  return out;
}

}  // namespace tpgcn
