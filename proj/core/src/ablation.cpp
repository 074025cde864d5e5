#include "tpgcn/ablation.hpp"

#include <cmath>
#include <json.hpp>

#include "tpgcn/toy_data.hpp"

namespace tpgcn {

AblationOptions::AblationOptions() {
  model.frames = frames;
  train.epochs = 8;
  train.warmup_epochs = 1;
  train.batch_size = 8;
}

std::string AblationRow::variant() const { return sweep == "mode" ? to_string(mode) : to_string(strategy); }

std::string AblationRow::to_json() const {
  return nlohmann::json{{"sweep", sweep},   {"mode", to_string(mode)}, {"strategy", to_string(strategy)},
                        {"top1", top1},     {"mean", mean},            {"std", stddev},
                        {"params", params}, {"flops", flops}}
      .dump();
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

AblationRow run_variant(const AblationOptions& options, const std::string& sweep, GraphScaleMode mode,
                        Strategy strategy) {
  AblationRow row;
  row.sweep = sweep;
  row.mode = mode;
  row.strategy = strategy;
  const int classes = static_cast<int>(options.model.num_classes);
  for (std::uint64_t seed : options.seeds) {
    ModelConfig mc = options.model;
    mc.mode = mode;
    mc.strategy = strategy;
    mc.frames = options.frames;
    mc.seed = seed;
    DatasetOptions dopt;
    dopt.features.mode = mode;
    dopt.features.strategy = strategy;
    dopt.features.adjacency = mc.adjacency;
    dopt.frames = options.frames;
    ToyOptions toy;
    toy.frames = options.frames;
    const Dataset train_set = Dataset::from_sequences(
        make_toy_dataset(1000 + seed, classes, options.samples_per_class, toy).sequences, mc.num_classes, dopt);
    const Dataset eval_set = Dataset::from_sequences(
        make_toy_dataset(2000 + seed, classes, options.eval_samples_per_class, toy).sequences, mc.num_classes, dopt);
    Model<float> model(mc);
    row.params = model.count_params();
    row.flops = model.estimate_flops();
    TrainConfig tc = options.train;
    tc.seed = seed;
    tc.checkpoint_path.clear();
    train(model, train_set, nullptr, tc);
    row.top1.push_back(evaluate(model, eval_set, tc.batch_size).top1);
  }
  std::tie(row.mean, row.stddev) = mean_std(row.top1);
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const AblationOptions& options,
                                      const std::function<void(const AblationRow&)>& on_row) {
  std::vector<AblationRow> rows;
  auto emit = [&](AblationRow row) {
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  };
  for (GraphScaleMode mode : options.modes) emit(run_variant(options, "mode", mode, Strategy::Geometric));
  for (Strategy s : options.strategies) emit(run_variant(options, "strategy", GraphScaleMode::Mutual, s));
  return rows;
}

}  // namespace tpgcn
