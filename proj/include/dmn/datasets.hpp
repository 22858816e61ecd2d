#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmn/sample.hpp"
#include "dmn/tensor.hpp"

namespace dmn {

enum class SyntheticKind { squares, rectangles };

std::string to_string(SyntheticKind kind);
std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name);

/// 1000 images, label = index % 2, background 0 and one filled shape of 1.
/// Shapes keep a one-pixel gap to the border. Class 0 is 5x5, class 1 9x9.
std::vector<Sample> gen_squares(std::uint64_t seed, std::size_t size = 224);
/// Class 0 is 7 wide x 3 tall, class 1 is 3 wide x 7 tall.
std::vector<Sample> gen_rectangles(std::uint64_t seed, std::size_t size = 224);
std::vector<Sample> gen_synthetic(SyntheticKind kind, std::uint64_t seed, std::size_t size = 224,
                                  std::size_t count = 1000);

/// Sample ids per split.
struct SplitIds {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Stratified 60/20/20: each class is shuffled and cut separately, then each
/// split is shuffled.
SplitIds split_60_20_20(std::span<const Sample> samples, std::uint64_t seed);
/// Looks samples up by id.
Split materialize(std::span<const Sample> samples, const SplitIds& ids);

// ---- netpbm ------------------------------------------------------------------

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P5 (1 channel) or P6 (3 channels), maxval up to 65535, '#' comments in the
/// header. Values are scaled to [0, 1]. `source` prefixes error messages.
Tensor decode_netpbm(std::string_view bytes, const std::string& source);
Tensor read_netpbm(const std::filesystem::path& path);

/// 1-channel tensors become P5, 3-channel tensors P6. Values are clamped to
/// [0, 1] and rounded to maxval.
std::string encode_netpbm(const Tensor& image, unsigned maxval = 255);
void write_netpbm(const std::filesystem::path& path, const Tensor& image, unsigned maxval = 255);

/// Half-pixel-center bilinear interpolation with edge clamping.
Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);
/// Each output pixel copies the input pixel its center falls in.
Tensor resize_nearest(const Tensor& image, std::size_t height, std::size_t width);

/// 1 -> 3 channels by replication, 3 -> 1 by channel mean.
Tensor convert_channels(const Tensor& image, std::size_t channels);

struct FolderDataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::size_t channels = 0;
};

/// One subdirectory per class, sorted lexicographically; files (.pgm, .ppm,
/// .pnm) sorted likewise. Images are resized to size x size. `channels` 0
/// takes the channel count of the first image; others are converted.
FolderDataset load_image_folder(const std::filesystem::path& root, std::size_t size = 224,
                                std::size_t channels = 0);

// ---- on-disk dataset ---------------------------------------------------------

struct ManifestRow {
  std::size_t id = 0;
  std::string file;
  std::size_t label = 0;
  std::string split;  // train, validation or test
};

/// Writes class_<label>/<id>.pgm files plus manifest.csv (id,file,label,split).
std::vector<ManifestRow> write_dataset(const std::filesystem::path& dir,
                                       std::span<const Sample> samples, const SplitIds& ids);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest);

struct ManifestDataset {
  Split split;
  std::size_t classes = 0;
  std::size_t channels = 0;
};

/// Loads a directory written by write_dataset, resizing to size x size.
ManifestDataset load_manifest_dataset(const std::filesystem::path& dir, std::size_t size = 224,
                                      std::size_t channels = 0);

}  // namespace dmn
