#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dmn/tensor.hpp"

// Classical flat grayscale morphology. This is the reference the trainable
// operators are checked against, so it favors directness over speed.
//
// Neighborhood convention: an active SE cell (r, c) with center (cr, cc)
// probes the pixel at (i + r - cr, j + c - cc) for both erosion and dilation.
// Out-of-image neighbors are skipped. Multi-channel images are processed per
// channel.
namespace dmn::classical {

enum class SeShape { square, disk, diamond, cross, x_shape };

SeShape parse_se_shape(const std::string& name);

class StructuringElement {
 public:
  /// mask is rows x cols row-major (nonzero = active).
  StructuringElement(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask,
                     std::size_t center_row, std::size_t center_col);
  /// Centered at (rows/2, cols/2).
  StructuringElement(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t center_row() const { return center_row_; }
  std::size_t center_col() const { return center_col_; }
  bool active(std::size_t r, std::size_t c) const { return mask_[r * cols_ + c] != 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  /// Point reflection through the center (same grid size, mirrored center).
  StructuringElement reflected() const;

  /// Rows of '0'/'1', newline terminated.
  std::string to_ascii() const;

  bool operator==(const StructuringElement&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> mask_;
  std::size_t center_row_;
  std::size_t center_col_;
};

/// Inverse of to_ascii; the result is centered at (rows/2, cols/2).
StructuringElement parse_se_ascii(std::string_view text);

/// Canonical centered SE of odd side `size`.
StructuringElement make_se(SeShape shape, std::size_t size);

/// Solid rows x cols rectangle (any sides >= 1), centered at (rows/2, cols/2).
StructuringElement make_rectangle(std::size_t rows, std::size_t cols);

/// Whether the pixel itself always joins its neighborhood. include_center is
/// the supremum/infimum form of erosion; mask_only is the ordered-set form,
/// which is what the decomposed-filter operators compute.
enum class CenterPolicy { include_center, mask_only };

Tensor erode(const Tensor& image, const StructuringElement& se,
             CenterPolicy policy = CenterPolicy::include_center);
Tensor dilate(const Tensor& image, const StructuringElement& se,
              CenterPolicy policy = CenterPolicy::include_center);
Tensor opening(const Tensor& image, const StructuringElement& se,
               CenterPolicy policy = CenterPolicy::include_center);
Tensor closing(const Tensor& image, const StructuringElement& se,
               CenterPolicy policy = CenterPolicy::include_center);
Tensor white_tophat(const Tensor& image, const StructuringElement& se,
                    CenterPolicy policy = CenterPolicy::include_center);
Tensor black_tophat(const Tensor& image, const StructuringElement& se,
                    CenterPolicy policy = CenterPolicy::include_center);

enum class ReconstructionKind { by_erosion, by_dilation };

/// Geodesic reconstruction iterated to idempotence. by_erosion uses the
/// marker dilate(image, se) and the step max(erode(marker, elementary), image);
/// by_dilation is the dual with min.
Tensor reconstruct(ReconstructionKind kind, const Tensor& image, const StructuringElement& se,
                   const StructuringElement& elementary = make_se(SeShape::cross, 3),
                   CenterPolicy policy = CenterPolicy::include_center);

/// Single geodesic step with a larger SE: max(erode(dilate(image, se), se_prime), image)
/// for by_erosion, the min dual for by_dilation.
Tensor reconstruct_approx(ReconstructionKind kind, const Tensor& image,
                          const StructuringElement& se, const StructuringElement& se_prime,
                          CenterPolicy policy = CenterPolicy::include_center);

}  // namespace dmn::classical
