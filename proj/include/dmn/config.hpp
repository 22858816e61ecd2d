#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dmn/nn.hpp"

namespace dmn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key=value text: one pair per line, '#' starts a comment, blank lines
/// ignored, whitespace around keys and values trimmed. Duplicate keys and
/// malformed lines raise ConfigError naming `source` and the line number.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& source);

struct ExperimentConfig {
  std::string architecture = "synnet";
  /// "squares", "rectangles", or a directory (manifest.csv or class folders).
  std::string dataset = "squares";
  std::string output_dir = "run";
  std::uint64_t seed = 0;
  double learning_rate = 0.01;
  double weight_decay = 0.0005;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::size_t input_size = 224;
  /// 0 takes the channel count of the data.
  std::size_t channels = 0;
  bool reconstruction_dilate_se = true;

  TrainConfig train_config() const;
  /// Canonical key=value text, one key per line in a fixed order.
  std::string to_text() const;
};

/// Applies one key=value pair; `where` prefixes error messages.
void apply_config_key(ExperimentConfig& config, const std::string& key, const std::string& value,
                      const std::string& where);
ExperimentConfig parse_config(std::string_view text, const std::string& source);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError for unknown architectures and invalid training values.
void validate_config(const ExperimentConfig& config);

}  // namespace dmn
