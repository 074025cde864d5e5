#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tpgcn/model_config.hpp"
#include "tpgcn/trainer.hpp"

namespace tpgcn {

/// Graph-scale and labeling-strategy sweeps on the synthetic toy set. The mode
/// sweep uses geometric labeling; the strategy sweep uses Mutual mode.
struct AblationOptions {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int samples_per_class = 12;
  int eval_samples_per_class = 6;
  std::int64_t frames = 32;
  ModelConfig model = ModelConfig::toy();
  TrainConfig train;
  std::vector<GraphScaleMode> modes{GraphScaleMode::Baseline, GraphScaleMode::Mutual, GraphScaleMode::RandomSwap,
                                    GraphScaleMode::Symmetry};
  std::vector<Strategy> strategies{Strategy::Physical,      Strategy::Pairwise,       Strategy::Interactive,
                                   Strategy::Geometric,     Strategy::FullyConnected, Strategy::OnlyPairwise};

  AblationOptions();
};

struct AblationRow {
  std::string sweep;  // "mode" or "strategy"
  GraphScaleMode mode = GraphScaleMode::Mutual;
  Strategy strategy = Strategy::Geometric;
  std::vector<double> top1;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across seeds
  std::int64_t params = 0;
  std::int64_t flops = 0;

  std::string variant() const;
  std::string to_json() const;
};

/// mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_std(const std::vector<double>& values);

std::vector<AblationRow> run_ablation(const AblationOptions& options,
                                      const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace tpgcn
