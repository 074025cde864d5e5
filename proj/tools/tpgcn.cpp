// tpgcn: ingest, preprocess, graph building, training, evaluation and ablations
// for two-person skeleton interaction recognition.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "tpgcn/ablation.hpp"
#include "tpgcn/dataset.hpp"
#include "tpgcn/model.hpp"
#include "tpgcn/network_checks.hpp"
#include "tpgcn/toy_data.hpp"
#include "tpgcn/trainer.hpp"

namespace fs = std::filesystem;
using namespace tpgcn;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << bytes;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& extension) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == extension) files.push_back(e.path());
      }
    } else {
      files.emplace_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string base_dir_of(const std::string& manifest_path) { return fs::path(manifest_path).parent_path().string(); }

DatasetManifest load_split(const std::string& manifest_path, const std::string& split_path) {
  DatasetManifest m = DatasetManifest::load(manifest_path);
  if (!split_path.empty()) m = filter_manifest(m, SplitSpec::load(split_path));
  return m;
}

ModelConfig resolve_config(const std::string& path, bool toy) {
  if (!path.empty()) return ModelConfig::load(path);
  return toy ? ModelConfig::toy() : ModelConfig{};
}

DatasetOptions dataset_options(const ModelConfig& mc) {
  DatasetOptions o;
  o.features.mode = mc.mode;
  o.features.strategy = mc.strategy;
  o.features.adjacency = mc.adjacency;
  o.frames = mc.frames;
  return o;
}

// ---- subcommands

struct IngestArgs {
  std::string format = "ntu";
  std::vector<std::string> inputs;
  std::string out;
  std::uint32_t label = 0;
  std::uint32_t num_classes = 0;
  bool skip_errors = false;
};

int run_ingest(const IngestArgs& a) {
  fs::create_directories(a.out);
  const bool ntu = a.format == "ntu";
  DatasetManifest manifest;
  manifest.joint_count = ntu ? kNtuJoints : kSbuJoints;
  std::uint32_t max_label = 0;
  std::size_t skipped = 0;
  for (const auto& file : expand_inputs(a.inputs, ntu ? ".skeleton" : ".txt")) {
    const std::string stem = file.stem().string();
    SequenceMeta meta;
    meta.sample_id = stem;
    meta.label = a.label;
    try {
      SkeletonSequence seq;
      if (ntu) {
        if (auto name = parse_ntu_name(stem)) {
          meta.label = name->action - 1;
          meta.subject_id = name->performer;
          meta.camera_id = name->camera;
          meta.setup_id = name->setup;
        }
        seq = to_sequence(parse_ntu_skeleton(slurp(file.string())), meta);
      } else {
        seq = parse_sbu(slurp(file.string()), meta);
      }
      const std::string rel = stem + ".2pgc";
      save_sequence((fs::path(a.out) / rel).string(), seq);
      manifest.entries.push_back({stem, rel, meta.label, meta.subject_id, meta.camera_id, meta.setup_id});
      max_label = std::max(max_label, meta.label);
    } catch (const Error& e) {
      if (!a.skip_errors) throw;
      std::cerr << "skip " << file.string() << ": " << to_string(e.code()) << ": " << e.what() << "\n";
      ++skipped;
    }
  }
  manifest.num_classes = a.num_classes > 0 ? a.num_classes : (manifest.entries.empty() ? 0 : max_label + 1);
  manifest.save((fs::path(a.out) / "manifest.json").string());
  std::cout << "ingested " << manifest.entries.size() << " samples (" << skipped << " skipped) into " << a.out << "\n";
  return 0;
}

struct PreprocessArgs {
  std::string manifest, split, out, branches = "J,B,JM,BM", mode = "mutual", strategy = "physical";
  std::int64_t frames = 64;
};

int run_preprocess(const PreprocessArgs& a) {
  std::array<bool, 4> keep{};
  std::stringstream ss(a.branches);
  for (std::string tag; std::getline(ss, tag, ',');) keep[static_cast<std::size_t>(parse_branch(tag))] = true;
  DatasetOptions o;
  o.features.mode = parse_graph_scale(a.mode);
  o.features.strategy = parse_strategy(a.strategy);
  o.frames = a.frames;
  const DatasetManifest manifest = load_split(a.manifest, a.split);
  const Dataset data = Dataset::load(manifest, base_dir_of(a.manifest), o);
  fs::create_directories(a.out);
  DatasetManifest cached = manifest;
  for (std::size_t i = 0; i < data.size(); ++i) {
    FeatureBundle b = data.sample(i).bundle;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!keep[k]) b.streams[k] = Tensor<float>();
    }
    const std::string rel = manifest.entries[i].sample_id + ".2pgb";
    spit((fs::path(a.out) / rel).string(), encode_bundle(b, data.sample(i).meta));
    cached.entries[i].path = rel;
  }
  cached.save((fs::path(a.out) / "manifest.json").string());
  std::cout << "preprocessed " << data.size() << " samples (" << a.branches << ", " << a.mode << ", T=" << a.frames
            << ") into " << a.out << "\n";
  return 0;
}

struct GraphArgs {
  std::string strategy = "physical", sequence, exported;
  int joints = kNtuJoints;
  bool single = false, cross_hands = false;
  int max_hop = 2;
};

int run_graph(const GraphArgs& a) {
  AdjacencyOptions opt;
  opt.max_hop = a.max_hop;
  opt.interactive_cross_hands = a.cross_hands;
  const SkeletonTopology topo = SkeletonTopology::for_joint_count(a.joints);
  std::optional<SkeletonSequence> seq;
  if (!a.sequence.empty()) seq = load_sequence(a.sequence);
  const LabeledAdjacency adj =
      build_adjacency(parse_strategy(a.strategy), topo, !a.single, seq ? &*seq : nullptr, opt);
  std::cout << "strategy=" << to_string(adj.strategy) << " V=" << adj.vertices << " K=" << adj.subset_count()
            << " edges=" << adj.edge_count() << "\n";
  if (!a.exported.empty()) {
    spit(a.exported, adj.to_json());
    std::cout << "wrote " << a.exported << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string config, manifest, train_split, val_split, val_manifest, checkpoint = "best.2pck", metrics;
  bool toy = false;
  std::optional<std::uint64_t> seed;
  TrainConfig train;
};

int run_train(TrainArgs a) {
  ModelConfig mc = resolve_config(a.config, a.toy);
  if (a.seed) {
    mc.seed = *a.seed;
    a.train.seed = *a.seed;
  }
  const DatasetOptions o = dataset_options(mc);
  const Dataset train_set = Dataset::load(load_split(a.manifest, a.train_split), base_dir_of(a.manifest), o);
  std::optional<Dataset> val_set;
  if (!a.val_manifest.empty()) {
    val_set = Dataset::load(load_split(a.val_manifest, a.val_split), base_dir_of(a.val_manifest), o);
  } else if (!a.val_split.empty()) {
    val_set = Dataset::load(load_split(a.manifest, a.val_split), base_dir_of(a.manifest), o);
  }
  Model<float> model(mc);
  std::ofstream metrics;
  if (!a.metrics.empty()) metrics.open(a.metrics);
  a.train.checkpoint_path = a.checkpoint;
  const TrainResult r = train(model, train_set, val_set ? &*val_set : nullptr, a.train, [&](const EpochMetrics& m) {
    std::cout << m.to_json() << std::endl;
    if (metrics) metrics << m.to_json() << "\n";
  });
  std::cerr << "epochs=" << r.epochs_run << " train_top1=" << r.final_train_top1;
  if (val_set) std::cerr << " best_eval_top1=" << r.best_eval_top1 << " (epoch " << r.best_epoch << ")";
  std::cerr << " checkpoint=" << a.checkpoint << "\n";
  return 0;
}

struct EvalArgs {
  std::string config, checkpoint, manifest, split;
  bool toy = false;
  int batch_size = 16;
};

int run_eval(const EvalArgs& a) {
  const ModelConfig mc = resolve_config(a.config, a.toy);
  Model<float> model(mc);
  model.load(a.checkpoint);
  const Dataset data = Dataset::load(load_split(a.manifest, a.split), base_dir_of(a.manifest), dataset_options(mc));
  std::cout << evaluate(model, data, a.batch_size).to_json() << "\n";
  return 0;
}

int run_gradcheck(std::uint64_t seed, bool full) {
  bool ok = true;
  for (const auto& c : run_network_gradchecks(seed, {}, full ? 0 : 16)) {
    std::cout << (c.report.passed() ? "PASS " : "FAIL ") << c.name << " worst_rel_err=" << c.report.worst() << "\n";
    if (!c.report.passed()) {
      std::cout << c.report.summary();
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

int run_info(const std::string& config, bool toy, const std::string& mode, const std::string& strategy) {
  ModelConfig mc = resolve_config(config, toy);
  if (!mode.empty()) mc.mode = parse_graph_scale(mode);
  if (!strategy.empty()) mc.strategy = parse_strategy(strategy);
  Model<float> model(mc);
  const std::int64_t params = model.count_params(), flops = model.estimate_flops();
  std::cout << "params " << params << " (" << std::fixed << std::setprecision(3) << params / 1e6 << "M)\n";
  std::cout << "flops " << flops << " (" << flops / 1e9 << "G) mode=" << to_string(mc.mode)
            << " strategy=" << to_string(mc.strategy) << " V=" << mc.vertices() << " T=" << mc.frames << "\n";
  return 0;
}

struct ToyArgs {
  std::uint64_t seed = 0;
  std::string out;
  int classes = 4, samples_per_class = 32;
  ToyOptions toy;
};

int run_toydata(const ToyArgs& a) {
  write_toy_dataset(make_toy_dataset(a.seed, a.classes, a.samples_per_class, a.toy), a.out);
  std::cout << "wrote " << a.classes * a.samples_per_class << " samples to " << a.out << "\n";
  return 0;
}

struct AblateArgs {
  std::string config, out;
  int seeds = 3;
  AblationOptions options;
};

int run_ablate(AblateArgs a) {
  if (!a.config.empty()) a.options.model = ModelConfig::load(a.config);
  a.options.seeds.clear();
  for (int s = 0; s < a.seeds; ++s) a.options.seeds.push_back(static_cast<std::uint64_t>(s));
  std::ofstream out;
  if (!a.out.empty()) out.open(a.out);
  std::cout << std::fixed << std::setprecision(4);
  run_ablation(a.options, [&](const AblationRow& row) {
    std::cout << std::left << std::setw(9) << row.sweep << std::setw(14) << row.variant() << row.mean << " +- "
              << row.stddev << "  params=" << row.params << " flops=" << row.flops << std::endl;
    if (out) out << row.to_json() << "\n";
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-person graph convolution toolkit for skeleton interaction recognition"};
  app.require_subcommand(1);
  int status = 0;

  IngestArgs ingest;
  auto* ci = app.add_subcommand("ingest", "Convert raw captures into canonical sequence files and a manifest");
  ci->add_option("--format", ingest.format, "Input layout")->check(CLI::IsMember({"ntu", "sbu"}));
  ci->add_option("inputs", ingest.inputs, "Files or directories")->required();
  ci->add_option("--out", ingest.out, "Output directory")->required();
  ci->add_option("--label", ingest.label, "Label when the file name carries none");
  ci->add_option("--num-classes", ingest.num_classes, "Class count (default: max label + 1)");
  ci->add_flag("--skip-errors", ingest.skip_errors, "Skip unreadable captures instead of failing");
  ci->callback([&] { status = run_ingest(ingest); });

  PreprocessArgs prep;
  auto* cp = app.add_subcommand("preprocess", "Compute the four input branches and cache them");
  cp->add_option("--manifest", prep.manifest)->required();
  cp->add_option("--split", prep.split, "Split JSON {field, values}");
  cp->add_option("--out", prep.out)->required();
  cp->add_option("--branches", prep.branches, "Comma list of J,B,JM,BM");
  cp->add_option("--mode", prep.mode, "baseline|mutual|randomswap|symmetry");
  cp->add_option("--strategy", prep.strategy);
  cp->add_option("--frames", prep.frames);
  cp->callback([&] { status = run_preprocess(prep); });

  GraphArgs graph;
  auto* cg = app.add_subcommand("graph", "Build a labeled adjacency and optionally export it as JSON");
  cg->add_option("--strategy", graph.strategy, "physical|pairwise|interactive|geometric|fc|onlypairwise");
  cg->add_option("--joints", graph.joints, "Joints per body (25, 15 or 6)");
  cg->add_flag("--single", graph.single, "Single-body graph (V = N)");
  cg->add_option("--sequence", graph.sequence, "Canonical sequence for geometric labeling");
  cg->add_option("--max-hop", graph.max_hop);
  cg->add_flag("--cross-hands", graph.cross_hands, "Interactive: also link opposite hands");
  cg->add_option("--export", graph.exported, "Write adjacency JSON here");
  cg->callback([&] { status = run_graph(graph); });

  TrainArgs tr;
  auto* ct = app.add_subcommand("train", "Train a model; metrics are printed as JSON lines");
  ct->add_option("--config", tr.config, "Model config JSON");
  ct->add_flag("--toy", tr.toy, "Use the reduced desk-scale model when no config is given");
  ct->add_option("--manifest", tr.manifest)->required();
  ct->add_option("--train-split", tr.train_split);
  ct->add_option("--val-split", tr.val_split);
  ct->add_option("--val-manifest", tr.val_manifest, "Held-out manifest (default: --manifest with --val-split)");
  ct->add_option("--seed", tr.seed);
  ct->add_option("--epochs", tr.train.epochs);
  ct->add_option("--warmup", tr.train.warmup_epochs);
  ct->add_option("--batch-size", tr.train.batch_size);
  ct->add_option("--lr", tr.train.base_lr);
  ct->add_option("--weight-decay", tr.train.weight_decay);
  ct->add_option("--stop-train", tr.train.stop_train_top1, "Stop when train top-1 reaches this");
  ct->add_option("--stop-eval", tr.train.stop_eval_top1, "...and held-out top-1 reaches this");
  ct->add_option("--checkpoint", tr.checkpoint, "Best checkpoint path");
  ct->add_option("--metrics", tr.metrics, "Also append JSON lines here");
  ct->callback([&] { status = run_train(tr); });

  EvalArgs ev;
  auto* ce = app.add_subcommand("eval", "Evaluate a checkpoint");
  ce->add_option("--config", ev.config);
  ce->add_flag("--toy", ev.toy);
  ce->add_option("--checkpoint", ev.checkpoint)->required();
  ce->add_option("--manifest", ev.manifest)->required();
  ce->add_option("--split", ev.split);
  ce->add_option("--batch-size", ev.batch_size);
  ce->callback([&] { status = run_eval(ev); });

  std::uint64_t gc_seed = 7;
  bool gc_full = false;
  auto* cc = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer type");
  cc->add_option("--seed", gc_seed);
  cc->add_flag("--full", gc_full, "Check every element of the tiny model");
  cc->callback([&] { status = run_gradcheck(gc_seed, gc_full); });

  std::string info_config, info_mode, info_strategy;
  bool info_toy = false;
  auto* cn = app.add_subcommand("info", "Print parameter count and FLOP estimate");
  cn->add_option("--config", info_config);
  cn->add_flag("--toy", info_toy);
  cn->add_option("--mode", info_mode);
  cn->add_option("--strategy", info_strategy);
  cn->callback([&] { status = run_info(info_config, info_toy, info_mode, info_strategy); });

  ToyArgs toy;
  auto* cy = app.add_subcommand("toydata", "Write the synthetic interaction dataset");
  cy->add_option("--seed", toy.seed);
  cy->add_option("--out", toy.out)->required();
  cy->add_option("--classes", toy.classes);
  cy->add_option("--samples-per-class", toy.samples_per_class);
  cy->add_option("--frames", toy.toy.frames);
  cy->add_option("--noise", toy.toy.noise);
  cy->callback([&] { status = run_toydata(toy); });

  AblateArgs ab;
  auto* ca = app.add_subcommand("ablate", "Graph-scale and labeling sweeps on the toy set, mean +- std over seeds");
  ca->add_option("--config", ab.config, "Base model config (default: toy)");
  ca->add_option("--seeds", ab.seeds, "Number of seeds");
  ca->add_option("--epochs", ab.options.train.epochs);
  ca->add_option("--warmup", ab.options.train.warmup_epochs);
  ca->add_option("--batch-size", ab.options.train.batch_size);
  ca->add_option("--samples-per-class", ab.options.samples_per_class);
  ca->add_option("--eval-samples-per-class", ab.options.eval_samples_per_class);
  ca->add_option("--frames", ab.options.frames);
  ca->add_option("--out", ab.out, "JSON lines output");
  ca->callback([&] { status = run_ablate(ab); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return status;
}
