#include "dmn/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "dmn/checkpoint.hpp"
#include "dmn/framework.hpp"
#include "dmn/rng.hpp"

namespace fs = std::filesystem;

namespace dmn {

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData data;
  if (auto kind = parse_synthetic_kind(config.dataset)) {
    auto samples = gen_synthetic(*kind, derive_seed(config.seed, "data"), config.input_size);
    const std::size_t channels = config.channels == 0 ? 1 : config.channels;
    if (channels != 1) {
      for (auto& s : samples) s.image = convert_channels(s.image, channels);
    }
    data.split = materialize(samples, split_60_20_20(samples, derive_seed(config.seed, "split")));
    data.classes = 2;
    data.channels = channels;
    return data;
  }
  const fs::path dir(config.dataset);
  if (!fs::is_directory(dir)) {
    throw ConfigError("dataset '" + config.dataset +
                      "' is neither squares, rectangles nor a directory");
  }
  if (fs::exists(dir / "manifest.csv")) {
    auto ds = load_manifest_dataset(dir, config.input_size, config.channels);
    data.split = std::move(ds.split);
    data.classes = ds.classes;
    data.channels = ds.channels;
  } else {
    auto ds = load_image_folder(dir, config.input_size, config.channels);
    data.split =
        materialize(ds.samples, split_60_20_20(ds.samples, derive_seed(config.seed, "split")));
    data.classes = ds.class_names.size();
    data.channels = ds.channels;
  }
  if (data.classes < 2) throw std::runtime_error(config.dataset + ": need at least two classes");
  return data;
}

std::string model_description(const std::string& architecture, const BuildOptions& o) {
  return "architecture=" + architecture + "\nclasses=" + std::to_string(o.classes) +
         "\nchannels=" + std::to_string(o.in_channels) +
         "\ninput_size=" + std::to_string(o.input_size) +
         "\nreconstruction_dilate_se=" + (o.reconstruction_dilate_se ? "true" : "false") + "\n";
}

namespace {

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& source) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CheckpointError(source + ": model description lacks " + key);
  try {
    std::size_t used = 0;
    const auto v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw CheckpointError(source + ": bad " + key + " in model description");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error(dir.string() + ": cannot create directory");
  }
}

const std::vector<Sample>& pick_split(const Split& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "validation") return split.validation;
  if (name == "test") return split.test;
  throw UsageError("unknown split '" + name + "' (expected train, validation or test)");
}

const MorphLayer& morph_layer_at(const Network& net, std::size_t layer) {
  if (layer >= net.size()) {
    throw UsageError("layer " + std::to_string(layer) + " out of range (network has " +
                     std::to_string(net.size()) + " layers)");
  }
  const auto* m = dynamic_cast<const MorphLayer*>(&net.layer(layer));
  if (!m) {
    throw UsageError("layer " + std::to_string(layer) + " is a " + net.layer(layer).kind() +
                     " layer, not a morphological one");
  }
  return *m;
}

Tensor se_image(const classical::StructuringElement& se) {
  Tensor t(1, se.rows(), se.cols());
  for (std::size_t r = 0; r < se.rows(); ++r)
    for (std::size_t c = 0; c < se.cols(); ++c) t.at(0, r, c) = se.active(r, c) ? 1.0 : 0.0;
  return t;
}

}  // namespace

LoadedModel load_model(const fs::path& checkpoint) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const std::string source = checkpoint.string();
  std::map<std::string, std::string> kv;
  try {
    kv = parse_key_values(ckpt.model, source + " (model)");
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  BuildOptions o;
  o.classes = to_size(kv, "classes", source);
  o.in_channels = to_size(kv, "channels", source);
  o.input_size = to_size(kv, "input_size", source);
  o.reconstruction_dilate_se = kv["reconstruction_dilate_se"] != "false";
  const std::string arch = kv["architecture"];
  if (!is_architecture(arch)) throw CheckpointError(source + ": unknown architecture '" + arch + "'");
  ExperimentConfig config;
  try {
    config = parse_config(ckpt.config, source + " (config)");
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  Network net = build_network(arch, o);
  restore_parameters(net, ckpt.blobs);
  return LoadedModel{std::move(net), config, o};
}

std::vector<ManifestRow> cmd_gen_data(SyntheticKind kind, std::uint64_t seed,
                                      const fs::path& out_dir, std::size_t size,
                                      std::ostream& out) {
  const auto samples = gen_synthetic(kind, derive_seed(seed, "data"), size);
  const auto ids = split_60_20_20(samples, derive_seed(seed, "split"));
  ensure_dir(out_dir);
  auto rows = write_dataset(out_dir, samples, ids);
  out << "samples=" << rows.size() << " train=" << ids.train.size()
      << " validation=" << ids.validation.size() << " test=" << ids.test.size() << '\n';
  return rows;
}

TrainOutcome cmd_train(const ExperimentConfig& config, std::ostream& out, std::ostream* progress) {
  validate_config(config);
  const ExperimentData data = load_experiment_data(config);
  BuildOptions o;
  o.classes = data.classes;
  o.in_channels = data.channels;
  o.input_size = config.input_size;
  o.reconstruction_dilate_se = config.reconstruction_dilate_se;
  Network net = build_network(config.architecture, o);
  net.initialize(config.seed);

  const fs::path dir(config.output_dir);
  ensure_dir(dir);
  TrainOutcome outcome;
  try {
    outcome.metrics = train(net, data.split, config.train_config(), progress);
  } catch (const DivergenceError& e) {
    write_text(dir / "divergence.txt", std::string(e.what()) + "\n");
    throw;
  }
  outcome.checkpoint = dir / kCheckpointFile;
  outcome.metrics_csv = dir / kMetricsFile;

  Checkpoint ckpt;
  ckpt.model = model_description(config.architecture, o);
  ckpt.config = config.to_text();
  ckpt.blobs = snapshot_parameters(net);
  write_checkpoint(outcome.checkpoint, ckpt);

  std::ofstream csv(outcome.metrics_csv, std::ios::binary);
  if (!csv) throw std::runtime_error(outcome.metrics_csv.string() + ": cannot open for writing");
  write_metrics_csv(outcome.metrics, csv);
  csv.close();

  const std::string summary = "test_accuracy=" + format_accuracy(outcome.metrics.test_accuracy);
  write_text(dir / kSummaryFile, summary + "\n");
  out << summary << '\n';
  out << "train_seconds=" << format_accuracy(outcome.metrics.seconds) << '\n';
  return outcome;
}

double cmd_eval(const fs::path& checkpoint, const std::string& dataset, const std::string& split,
                std::ostream& out) {
  LoadedModel model = load_model(checkpoint);
  ExperimentConfig config = model.config;
  if (!dataset.empty()) config.dataset = dataset;
  config.input_size = model.options.input_size;
  config.channels = model.options.in_channels;
  const ExperimentData data = load_experiment_data(config);
  if (data.classes != model.options.classes) {
    throw std::runtime_error("incompatible checkpoint: model has " +
                             std::to_string(model.options.classes) + " classes, dataset has " +
                             std::to_string(data.classes));
  }
  const double acc = evaluate(model.net, pick_split(data.split, split));
  out << "accuracy=" << format_accuracy(acc) << '\n';
  return acc;
}

std::vector<fs::path> cmd_inspect_se(const fs::path& checkpoint, std::size_t layer,
                                     std::size_t neuron, const fs::path& out_dir,
                                     std::ostream& out) {
  LoadedModel model = load_model(checkpoint);
  const MorphLayer& m = morph_layer_at(model.net, layer);
  if (neuron >= m.neurons().size()) {
    throw UsageError("neuron " + std::to_string(neuron) + " out of range (layer " +
                     std::to_string(layer) + " has " + std::to_string(m.neurons().size()) +
                     " neurons)");
  }
  const MorphNeuron& n = m.neurons()[neuron];
  std::vector<std::pair<std::string, classical::StructuringElement>> stages{
      {"stage1", recover_se(n.stage1_bank())}, {"stage2", recover_se(n.stage2_base_bank())}};
  const bool reconstruction =
      n.spec().kind == NeuronKind::rec_by_erosion || n.spec().kind == NeuronKind::rec_by_dilation;
  if (reconstruction && n.spec().reconstruction_dilate_se) {
    stages.emplace_back("stage2_dilated", recover_se(n.stage2_bank()));
  }
  ensure_dir(out_dir);
  std::vector<fs::path> files;
  const std::string prefix = "l" + std::to_string(layer) + ".n" + std::to_string(neuron) + ".";
  out << "neuron=" << to_string(n.spec().kind) << '\n';
  for (const auto& [stage, se] : stages) {
    const fs::path txt = out_dir / (prefix + stage + ".txt");
    const fs::path pgm = out_dir / (prefix + stage + ".pgm");
    write_text(txt, se.to_ascii());
    write_netpbm(pgm, se_image(se));
    files.push_back(txt);
    files.push_back(pgm);
    out << stage << " " << se.rows() << "x" << se.cols() << " active=" << se.count() << '\n'
        << se.to_ascii();
  }
  return files;
}

Tensor normalize_min_max(const Tensor& map) {
  const double lo = map.min();
  const double hi = map.max();
  Tensor out(map.shape());
  if (!(hi > lo)) return out;
  const double scale = 1.0 / (hi - lo);
  for (std::size_t k = 0; k < map.size(); ++k) out.data()[k] = (map.data()[k] - lo) * scale;
  return out;
}

std::vector<fs::path> cmd_export_features(const fs::path& checkpoint, const fs::path& image,
                                          std::size_t layer, const std::string& stage,
                                          const fs::path& out_dir, std::ostream& out) {
  LoadedModel model = load_model(checkpoint);
  Network& net = model.net;
  if (layer >= net.size()) {
    throw UsageError("layer " + std::to_string(layer) + " out of range (network has " +
                     std::to_string(net.size()) + " layers)");
  }
  if (stage != "output" && stage != "stage1" && stage != "stage2" && stage != "core") {
    throw UsageError("unknown stage '" + stage + "' (expected output, stage1, stage2 or core)");
  }
  const MorphLayer* morph = stage == "output" ? nullptr : &morph_layer_at(net, layer);
  const std::size_t side = model.options.input_size;
  Tensor x = resize_bilinear(convert_channels(read_netpbm(image), model.options.in_channels),
                             side, side);
  for (std::size_t i = 0; i <= layer; ++i) x = net.layer(i).forward(x);

  ensure_dir(out_dir);
  std::vector<fs::path> files;
  auto dump = [&](const Tensor& maps, const std::string& prefix) {
    for (std::size_t c = 0; c < maps.channels(); ++c) {
      const fs::path f = out_dir / (prefix + ".c" + std::to_string(c) + ".pgm");
      write_netpbm(f, resize_nearest(normalize_min_max(maps.channel(c)), side, side));
      files.push_back(f);
    }
  };
  const std::string base = "l" + std::to_string(layer);
  if (!morph) {
    dump(x, base + ".output");
  } else {
    for (std::size_t n = 0; n < morph->neurons().size(); ++n) {
      const NeuronCache& cache = morph->cache(n);
      const Tensor& maps = stage == "stage1"   ? cache.stage1.output
                           : stage == "stage2" ? cache.stage2.output
                                               : cache.core;
      dump(maps, base + ".n" + std::to_string(n) + "." + stage);
    }
  }
  out << "files=" << files.size() << '\n';
  return files;
}

GradcheckReport cmd_gradcheck(const std::string& architecture, std::uint64_t seed,
                              const BuildOptions& options, std::size_t max_entries,
                              std::ostream& out) {
  if (!is_architecture(architecture)) {
    throw UsageError("unknown architecture '" + architecture + "'");
  }
  Network net = build_network(architecture, options);
  net.initialize(seed);
  jitter_biases(net, seed);
  Rng rng(derive_seed(seed, "data"));
  Tensor input(net.input_shape());
  for (double& v : input.data()) v = rng.uniform();
  const std::size_t label = static_cast<std::size_t>(seed % options.classes);
  GradcheckReport report = gradcheck(net, input, label, 1e-5, max_entries, seed);
  for (const auto& g : report.groups) {
    out << g.name << " checked=" << g.checked << " max_rel_error=" << g.max_rel_error << '\n';
  }
  out << "gradcheck " << architecture << " max_rel_error=" << report.max_rel_error << ' '
      << (report.max_rel_error < kGradcheckTolerance ? "PASS" : "FAIL") << '\n';
  return report;
}

}  // namespace dmn
