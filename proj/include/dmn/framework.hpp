#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dmn/morphology.hpp"
#include "dmn/tensor.hpp"

// Erosion and dilation expressed as depthwise convolution with max-binarized
// decomposed filters followed by a per-channel depthwise min/max pooling.
namespace dmn {

enum class MorphDirection { erosion, dilation };

/// Index (row-major) of the maximum cell; ties go to the lowest index.
std::size_t max_binarize_index(std::span<const double> filter);

/// One-hot copy of a 1 x s x s filter at its maximum cell.
Tensor max_binarize(const Tensor& filter);

/// Binarized view of a decomposed bank: filter f is one-hot at cell active[f]
/// of a side x side grid.
class BinaryBank {
 public:
  BinaryBank(std::size_t side, std::vector<std::uint32_t> active);

  std::size_t side() const { return side_; }
  std::size_t filters() const { return active_.size(); }
  std::uint32_t active_cell(std::size_t f) const { return active_[f]; }
  std::size_t active_row(std::size_t f) const { return active_[f] / side_; }
  std::size_t active_col(std::size_t f) const { return active_[f] % side_; }
  const std::vector<std::uint32_t>& active() const { return active_; }

  /// Dense (filters, side, side) one-hot tensor, for the depthwise-conv route.
  Tensor as_tensor() const;

  bool operator==(const BinaryBank&) const = default;

 private:
  std::size_t side_;
  std::vector<std::uint32_t> active_;
};

/// Binarize s*s real filters of size s x s stored contiguously (filter-major).
BinaryBank binarize_bank(std::span<const double> weights, std::size_t side);

/// Union of the one-hot filters, centered at (side/2, side/2).
classical::StructuringElement recover_se(const BinaryBank& bank);

/// One filter per active SE cell, in row-major order. The SE must be square
/// and centered.
BinaryBank bank_from_se(const classical::StructuringElement& se);

/// SE dilated by a 3x3 square on a grid grown by one cell per side.
classical::StructuringElement dilate_se_for_reconstruction(const classical::StructuringElement& se);

/// Winning decomposed filter per output pixel and input channel.
struct PoolTrace {
  Shape shape;
  std::vector<std::uint32_t> winner;

  std::uint32_t at(std::size_t c, std::size_t i, std::size_t j) const {
    return winner[(c * shape.height + i) * shape.width + j];
  }
};

struct MorphResult {
  Tensor output;
  PoolTrace trace;
};

/// Binarized depthwise convolution followed by min (erosion) or max
/// (dilation) pooling over each input channel's own planes. Pooling ties go
/// to the lowest filter index; padded cells read as zero.
MorphResult framework_morph(MorphDirection direction, const BinaryBank& bank,
                            std::size_t stride, std::size_t padding, const Tensor& input);

struct MorphGrads {
  Tensor input;
  /// Gradient with respect to the binary filters, (filters, side, side) flattened.
  std::vector<double> bank;
};

/// Routes each output gradient to the winning plane only. The bank gradient is
/// the dense gradient of the depthwise convolution w.r.t. the binary filters.
MorphGrads framework_morph_backward(const BinaryBank& bank, std::size_t stride,
                                    std::size_t padding, const Tensor& input,
                                    const PoolTrace& trace, const Tensor& grad_out);

}  // namespace dmn
