#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmn/checkpoint.hpp"
#include "dmn/commands.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

dmn::ExperimentConfig config_with_overrides(const std::string& path,
                                            const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw dmn::ConfigError(path + ": cannot open config file");
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  dmn::ExperimentConfig config = dmn::parse_config(text, path.empty() ? "<none>" : path);
  for (std::size_t k = 0; k < overrides.size(); ++k) {
    const auto& kv = overrides[k];
    const auto eq = kv.find('=');
    const std::string where = "--set #" + std::to_string(k + 1);
    if (eq == std::string::npos) throw dmn::ConfigError(where + ": expected key=value");
    dmn::apply_config_key(config, kv.substr(0, eq), kv.substr(eq + 1), where);
  }
  dmn::validate_config(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep morphological networks: data generation, training and inspection"};
  app.require_subcommand(1);

  std::string kind = "squares";
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t size = 224;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as PGM files");
  gen->add_option("--kind", kind, "squares or rectangles")
      ->check(CLI::IsMember({"squares", "rectangles"}));
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--size", size, "Image side")->check(CLI::Range(11, 4096));

  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a network from a key=value config file");
  train->add_option("config", config_path, "Config file");
  train->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--dataset", dataset, "squares, rectangles or a directory (default: as trained)");
  eval->add_option("--split", split, "train, validation or test")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  std::size_t layer = 0;
  std::size_t neuron = 0;
  auto* inspect = app.add_subcommand("inspect-se", "Dump the structuring elements of a neuron");
  inspect->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  inspect->add_option("--layer", layer, "Network layer index");
  inspect->add_option("--neuron", neuron, "Neuron index within the layer");
  inspect->add_option("--out", out_dir, "Output directory")->required();

  std::string image;
  std::string stage = "output";
  auto* features = app.add_subcommand("export-features", "Dump feature maps of one layer as PGM");
  features->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  features->add_option("--image", image, "Input PGM or PPM image")->required();
  features->add_option("--layer", layer, "Network layer index");
  features->add_option("--stage", stage, "output, stage1, stage2 or core")
      ->check(CLI::IsMember({"output", "stage1", "stage2", "core"}));
  features->add_option("--out", out_dir, "Output directory")->required();

  std::string architecture = "synnet";
  dmn::BuildOptions options;
  options.input_size = 64;
  std::size_t max_entries = 8;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
  grad->add_option("--architecture", architecture, "Architecture name")
      ->check(CLI::IsMember(dmn::architecture_names()));
  grad->add_option("--seed", seed, "Seed for initialization and input");
  grad->add_option("--input-size", options.input_size, "Input side")->check(CLI::PositiveNumber);
  grad->add_option("--channels", options.in_channels, "Input channels")
      ->check(CLI::IsMember({1, 3}));
  grad->add_option("--classes", options.classes, "Class count")->check(CLI::Range(2, 1000));
  grad->add_option("--max-entries", max_entries, "Entries probed per parameter")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      dmn::cmd_gen_data(*dmn::parse_synthetic_kind(kind), seed, out_dir, size, std::cout);
    } else if (train->parsed()) {
      const auto config = config_with_overrides(config_path, overrides);
      dmn::cmd_train(config, std::cout, quiet ? nullptr : &std::cerr);
    } else if (eval->parsed()) {
      dmn::cmd_eval(checkpoint, dataset, split, std::cout);
    } else if (inspect->parsed()) {
      dmn::cmd_inspect_se(checkpoint, layer, neuron, out_dir, std::cout);
    } else if (features->parsed()) {
      dmn::cmd_export_features(checkpoint, image, layer, stage, out_dir, std::cout);
    } else if (grad->parsed()) {
      const auto report = dmn::cmd_gradcheck(architecture, seed, options, max_entries, std::cout);
      if (!(report.max_rel_error < dmn::kGradcheckTolerance)) return kExitRuntime;
    }
  } catch (const dmn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dmn::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dmn::DivergenceError& e) {
    std::cerr << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
