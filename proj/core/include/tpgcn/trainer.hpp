#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tpgcn/dataset.hpp"
#include "tpgcn/model.hpp"
#include "tpgcn/schedule.hpp"

namespace tpgcn {

struct TrainConfig {
  int epochs = 65;
  int warmup_epochs = 5;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0002;
  int batch_size = 16;
  std::uint64_t seed = 0;
  DecayKind decay = DecayKind::Cosine;
  /// Stop once both accuracies are reached (0 disables the corresponding test).
  double stop_train_top1 = 0.0;
  double stop_eval_top1 = 0.0;
  /// Best checkpoint by eval top-1 is written here when non-empty.
  std::string checkpoint_path;

  void validate() const;
};

/// One line of the metrics log.
struct EpochMetrics {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double top1 = 0.0;
  std::string to_json() const;  // {"epoch":..,"split":..,"loss":..,"top1":..}
};

struct EvalReport {
  double top1 = 0.0;
  double loss = 0.0;
  std::vector<double> per_class;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::int64_t samples = 0;
  std::vector<int> predictions;
  std::vector<std::vector<float>> logits;  // per sample, averaged over its graphs

  std::string to_json() const;
};

EvalReport make_report(const std::vector<int>& labels, const std::vector<int>& predictions, std::uint32_t num_classes);

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_eval_top1 = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  double final_train_top1 = 0.0;
};

/// Seeded, single-threaded training. Errors: DataEmpty, ClassCountMismatch.
/// Symmetry mode trains on each person order as its own sample; Baseline averages
/// the logits of its two single-person graphs.
TrainResult train(Model<float>& model, const Dataset& train_set, const Dataset* eval_set, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_metrics = {});

/// Eval-mode forward; graph logits of each sample are averaged before the argmax.
EvalReport evaluate(Model<float>& model, const Dataset& data, int batch_size = 16);

}  // namespace tpgcn
