#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmn/nn.hpp"

namespace dmn {

inline constexpr char kCheckpointMagic[8] = {'D', 'M', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointBlob {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  /// key=value lines describing how to rebuild the network.
  std::string model;
  /// key=value echo of the experiment configuration.
  std::string config;
  std::vector<CheckpointBlob> blobs;
};

/// All integers little-endian, doubles as IEEE-754 binary64 little-endian:
///   magic "DMNCKPT\0" | u32 version | u32 len + model text | u32 len + config
///   text | u32 blob count | per blob: u32 len + name, u32 ndims, u64 dims...,
///   u64 count, f64 values...
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Snapshot of every parameter's values.
std::vector<CheckpointBlob> snapshot_parameters(Network& net);
/// Copies blob values into the network; names, order and dims must match.
void restore_parameters(Network& net, const std::vector<CheckpointBlob>& blobs);

}  // namespace dmn
