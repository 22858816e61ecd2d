#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmn/architectures.hpp"
#include "dmn/config.hpp"
#include "dmn/datasets.hpp"
#include "dmn/nn.hpp"

// The dmnet verbs as library calls. Errors are exceptions: ConfigError and
// UsageError are caller mistakes, anything else is a runtime failure.
namespace dmn {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentData {
  Split split;
  std::size_t classes = 0;
  std::size_t channels = 0;
};

/// Synthetic data is generated from derive_seed(seed, "data") and split with
/// derive_seed(seed, "split"); a directory with manifest.csv keeps its split
/// column; any other directory is read as class folders and split by seed.
ExperimentData load_experiment_data(const ExperimentConfig& config);

/// Output file names inside output_dir.
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kSummaryFile = "summary.txt";

struct LoadedModel {
  Network net;
  ExperimentConfig config;
  BuildOptions options;
};

std::string model_description(const std::string& architecture, const BuildOptions& options);
LoadedModel load_model(const std::filesystem::path& checkpoint);

/// Writes PGMs and manifest.csv for a synthetic dataset.
std::vector<ManifestRow> cmd_gen_data(SyntheticKind kind, std::uint64_t seed,
                                      const std::filesystem::path& out_dir, std::size_t size,
                                      std::ostream& out);

struct TrainOutcome {
  Metrics metrics;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_csv;
};

/// Trains, then writes the checkpoint, metrics CSV and summary into
/// config.output_dir and prints `test_accuracy=<value>`.
TrainOutcome cmd_train(const ExperimentConfig& config, std::ostream& out,
                       std::ostream* progress = nullptr);

/// `dataset` empty reuses the checkpoint's dataset. split is train,
/// validation or test. Prints `accuracy=<value>`.
double cmd_eval(const std::filesystem::path& checkpoint, const std::string& dataset,
                const std::string& split, std::ostream& out);

/// ASCII and PGM renderings of the SE of each stage of one neuron; layer is a
/// network layer index that must hold a morphological layer.
std::vector<std::filesystem::path> cmd_inspect_se(const std::filesystem::path& checkpoint,
                                                  std::size_t layer, std::size_t neuron,
                                                  const std::filesystem::path& out_dir,
                                                  std::ostream& out);

/// stage: output (any layer), or stage1, stage2, core (morphological layers,
/// one file per neuron and input channel). Maps are min-max normalized and
/// upsampled to the network input size by nearest neighbor.
std::vector<std::filesystem::path> cmd_export_features(const std::filesystem::path& checkpoint,
                                                       const std::filesystem::path& image,
                                                       std::size_t layer, const std::string& stage,
                                                       const std::filesystem::path& out_dir,
                                                       std::ostream& out);

/// Finite-difference check of every differentiable parameter group of a
/// freshly initialized network on a random input.
GradcheckReport cmd_gradcheck(const std::string& architecture, std::uint64_t seed,
                              const BuildOptions& options, std::size_t max_entries,
                              std::ostream& out);

inline constexpr double kGradcheckTolerance = 1e-4;

/// Min-max normalization to [0, 1]; a constant map becomes all zeros.
Tensor normalize_min_max(const Tensor& map);

}  // namespace dmn
