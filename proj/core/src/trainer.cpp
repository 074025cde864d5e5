#include "tpgcn/trainer.hpp"

#include <json.hpp>
#include <numeric>

#include "tpgcn/optimizer.hpp"

namespace tpgcn {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || warmup_epochs < 0 || warmup_epochs >= epochs) {
    fail(ErrorCode::InvalidArgument, "train config needs epochs >= 1, batch_size >= 1 and 0 <= warmup < epochs");
  }
}

std::string EpochMetrics::to_json() const {
  return json{{"epoch", epoch}, {"split", split}, {"loss", loss}, {"top1", top1}}.dump();
}

std::string EvalReport::to_json() const {
  return json{{"top1", top1}, {"loss", loss}, {"samples", samples}, {"per_class", per_class}, {"confusion", confusion}}
      .dump();
}

EvalReport make_report(const std::vector<int>& labels, const std::vector<int>& predictions, std::uint32_t num_classes) {
  if (labels.size() != predictions.size()) fail(ErrorCode::ShapeMismatch, "labels and predictions differ in length");
  EvalReport r;
  r.samples = static_cast<std::int64_t>(labels.size());
  r.predictions = predictions;
  r.confusion.assign(num_classes, std::vector<std::int64_t>(num_classes, 0));
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = static_cast<std::size_t>(labels[i]), p = static_cast<std::size_t>(predictions[i]);
    if (t >= num_classes || p >= num_classes) fail(ErrorCode::ClassCountMismatch, "class index beyond num_classes");
    ++r.confusion[t][p];
    if (t == p) ++correct;
  }
  r.top1 = r.samples > 0 ? static_cast<double>(correct) / static_cast<double>(r.samples) : 0.0;
  r.per_class.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::int64_t row = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::int64_t{0});
    r.per_class[c] = row > 0 ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(row) : 0.0;
  }
  return r;
}

namespace {

void check_classes(const Model<float>& model, const Dataset& data) {
  if (data.num_classes() != model.config().num_classes) {
    fail(ErrorCode::ClassCountMismatch, "dataset has " + std::to_string(data.num_classes()) + " classes, model " +
                                            std::to_string(model.config().num_classes));
  }
}

std::vector<int> argmax_rows(const Tensor<float>& logits) {
  const std::int64_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* p = logits.data() + r * k;
    out[static_cast<std::size_t>(r)] = static_cast<int>(std::max_element(p, p + k) - p);
  }
  return out;
}

}  // namespace

EvalReport evaluate(Model<float>& model, const Dataset& data, int batch_size) {
  check_classes(model, data);
  std::vector<int> labels, predictions;
  std::vector<std::vector<float>> all_logits;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const FeatureBundle*> batch;
    std::vector<int> batch_labels;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&data.view(i, false, nullptr));
      batch_labels.push_back(data.label(i));
    }
    const ModelInput<float> input = make_input<float>(batch);
    const Var<float> logits = average_graph_logits(model.forward(input, false), input.graphs_per_sample);
    loss_sum += static_cast<double>(ops::cross_entropy(logits, batch_labels).value()[0]) * static_cast<double>(batch.size());
    const auto pred = argmax_rows(logits.value());
    predictions.insert(predictions.end(), pred.begin(), pred.end());
    labels.insert(labels.end(), batch_labels.begin(), batch_labels.end());
    const std::int64_t k = logits.dim(1);
    for (std::int64_t r = 0; r < logits.dim(0); ++r) {
      all_logits.emplace_back(logits.value().data() + r * k, logits.value().data() + (r + 1) * k);
    }
  }
  EvalReport report = make_report(labels, predictions, data.num_classes());
  report.loss = data.empty() ? 0.0 : loss_sum / static_cast<double>(data.size());
  report.logits = std::move(all_logits);
  return report;
}

TrainResult train(Model<float>& model, const Dataset& train_set, const Dataset* eval_set, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_metrics) {
  config.validate();
  if (train_set.empty()) fail(ErrorCode::DataEmpty, "training set is empty");
  check_classes(model, train_set);
  if (eval_set != nullptr) check_classes(model, *eval_set);

  std::mt19937_64 rng(config.seed);
  SgdNesterov<float> optimizer(model.parameters(), {config.momentum, config.weight_decay, true});
  LrSchedule schedule;
  schedule.base_lr = config.base_lr;
  schedule.epochs = config.epochs;
  schedule.warmup_epochs = config.warmup_epochs;
  schedule.decay = config.decay;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  schedule.steps_per_epoch = static_cast<std::int64_t>((train_set.size() + bs - 1) / bs);

  const GraphScaleMode mode = model.config().mode;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::int64_t correct = 0, seen = 0;
    for (std::int64_t step = 0; step < schedule.steps_per_epoch; ++step) {
      const std::size_t start = static_cast<std::size_t>(step) * bs;
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<const FeatureBundle*> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set.view(order[i], true, &rng));
        labels.push_back(train_set.label(order[i]));
      }
      const ModelInput<float> input = make_input<float>(batch);
      optimizer.zero_grad();
      Tape<float> tape;
      const Var<float> graph_logits = model.forward(input, true);
      Var<float> loss;
      Var<float> sample_logits;
      if (mode == GraphScaleMode::Symmetry && input.graphs_per_sample > 1) {
        std::vector<int> graph_labels;
        for (int l : labels) graph_labels.insert(graph_labels.end(), static_cast<std::size_t>(input.graphs_per_sample), l);
        loss = ops::cross_entropy(graph_logits, graph_labels);
        sample_logits = average_graph_logits(graph_logits, input.graphs_per_sample);
      } else {
        sample_logits = average_graph_logits(graph_logits, input.graphs_per_sample);
        loss = ops::cross_entropy(sample_logits, labels);
      }
      tape.backward(loss);
      optimizer.step(lr_at(epoch, step, schedule));

      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(labels.size());
      const auto pred = argmax_rows(sample_logits.value());
      for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
      seen += static_cast<std::int64_t>(labels.size());
    }
    EpochMetrics train_metrics{epoch + 1, "train", loss_sum / static_cast<double>(seen),
                               static_cast<double>(correct) / static_cast<double>(seen)};
    result.history.push_back(train_metrics);
    result.final_train_top1 = train_metrics.top1;
    if (on_metrics) on_metrics(train_metrics);

    bool eval_ok = true;
    if (eval_set != nullptr && !eval_set->empty()) {
      const EvalReport report = evaluate(model, *eval_set, config.batch_size);
      EpochMetrics eval_metrics{epoch + 1, "eval", report.loss, report.top1};
      result.history.push_back(eval_metrics);
      if (on_metrics) on_metrics(eval_metrics);
      if (report.top1 > result.best_eval_top1 || result.best_epoch < 0) {
        result.best_eval_top1 = report.top1;
        result.best_epoch = epoch + 1;
        if (!config.checkpoint_path.empty()) model.save(config.checkpoint_path);
      }
      eval_ok = report.top1 >= config.stop_eval_top1;
    } else if (!config.checkpoint_path.empty()) {
      model.save(config.checkpoint_path);
    }
    result.epochs_run = epoch + 1;
    const bool stopping = config.stop_train_top1 > 0.0 || config.stop_eval_top1 > 0.0;
    if (stopping && train_metrics.top1 >= config.stop_train_top1 && eval_ok) break;
  }
  return result;
}

}  // namespace tpgcn
