#include "dmn/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmn::classical {

SeShape parse_se_shape(const std::string& name) {
  if (name == "square") return SeShape::square;
  if (name == "disk") return SeShape::disk;
  if (name == "diamond") return SeShape::diamond;
  if (name == "cross") return SeShape::cross;
  if (name == "x_shape" || name == "x") return SeShape::x_shape;
  throw std::invalid_argument("unknown structuring element shape '" + name + "'");
}

StructuringElement::StructuringElement(std::size_t rows, std::size_t cols,
                                       std::vector<std::uint8_t> mask, std::size_t center_row,
                                       std::size_t center_col)
    : rows_(rows), cols_(cols), mask_(std::move(mask)), center_row_(center_row),
      center_col_(center_col) {
  if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("structuring element must be non-empty");
  if (mask_.size() != rows_ * cols_) {
    throw std::invalid_argument("structuring element mask size does not match its grid");
  }
  if (center_row_ >= rows_ || center_col_ >= cols_) {
    throw std::invalid_argument("structuring element center lies outside the grid");
  }
  for (auto& m : mask_) m = m != 0 ? 1 : 0;
  if (count() == 0) throw std::invalid_argument("structuring element has no active cell");
}

StructuringElement::StructuringElement(std::size_t rows, std::size_t cols,
                                       std::vector<std::uint8_t> mask)
    : StructuringElement(rows, cols, std::move(mask), rows / 2, cols / 2) {}

std::size_t StructuringElement::count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

StructuringElement StructuringElement::reflected() const {
  std::vector<std::uint8_t> m(mask_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c)
      m[(rows_ - 1 - r) * cols_ + (cols_ - 1 - c)] = mask_[r * cols_ + c];
  return StructuringElement(rows_, cols_, std::move(m), rows_ - 1 - center_row_,
                            cols_ - 1 - center_col_);
}

std::string StructuringElement::to_ascii() const {
  std::string out;
  out.reserve(rows_ * (cols_ + 1));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out.push_back(active(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

StructuringElement parse_se_ascii(std::string_view text) {
  std::vector<std::uint8_t> mask;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t current = 0;
  auto end_row = [&] {
    if (current == 0) return;
    if (rows > 0 && current != cols) {
      throw std::invalid_argument("structuring element rows have different lengths");
    }
    cols = current;
    ++rows;
    current = 0;
  };
  for (char ch : text) {
    if (ch == '0' || ch == '1') {
      mask.push_back(ch == '1' ? 1 : 0);
      ++current;
    } else if (ch == '\n') {
      end_row();
    } else if (ch != '\r' && ch != ' ') {
      throw std::invalid_argument(std::string("unexpected character '") + ch +
                                  "' in structuring element text");
    }
  }
  end_row();
  if (rows == 0) throw std::invalid_argument("empty structuring element text");
  return StructuringElement(rows, cols, std::move(mask));
}

StructuringElement make_se(SeShape shape, std::size_t size) {
  if (size == 0 || size % 2 == 0) {
    throw std::invalid_argument("structuring element size must be odd and >= 1, got " +
                                std::to_string(size));
  }
  const auto half = static_cast<long>(size / 2);
  std::vector<std::uint8_t> mask(size * size, 0);
  for (long r = -half; r <= half; ++r) {
    for (long c = -half; c <= half; ++c) {
      bool on = false;
      switch (shape) {
        case SeShape::square: on = true; break;
        case SeShape::disk:
          on = std::sqrt(static_cast<double>(r * r + c * c)) <= static_cast<double>(size) / 2.0;
          break;
        case SeShape::diamond: on = std::labs(r) + std::labs(c) <= half; break;
        case SeShape::cross: on = r == 0 || c == 0; break;
        case SeShape::x_shape: on = std::labs(r) == std::labs(c); break;
      }
      mask[static_cast<std::size_t>((r + half) * static_cast<long>(size) + (c + half))] = on;
    }
  }
  return StructuringElement(size, size, std::move(mask));
}

StructuringElement make_rectangle(std::size_t rows, std::size_t cols) {
  return StructuringElement(rows, cols, std::vector<std::uint8_t>(rows * cols, 1));
}

namespace {

template <typename Pick>
Tensor neighborhood_filter(const Tensor& image, const StructuringElement& se, CenterPolicy policy,
                           Pick pick) {
  struct Offset {
    long dr, dc;
  };
  std::vector<Offset> offsets;
  bool has_center = false;
  for (std::size_t r = 0; r < se.rows(); ++r) {
    for (std::size_t c = 0; c < se.cols(); ++c) {
      if (!se.active(r, c)) continue;
      const long dr = static_cast<long>(r) - static_cast<long>(se.center_row());
      const long dc = static_cast<long>(c) - static_cast<long>(se.center_col());
      has_center = has_center || (dr == 0 && dc == 0);
      offsets.push_back({dr, dc});
    }
  }
  if (policy == CenterPolicy::include_center && !has_center) offsets.push_back({0, 0});

  const long h = static_cast<long>(image.height());
  const long w = static_cast<long>(image.width());
  Tensor out(image.shape());
  for (std::size_t ch = 0; ch < image.channels(); ++ch) {
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        bool any = false;
        double best = 0.0;
        for (const auto& o : offsets) {
          const long y = i + o.dr;
          const long x = j + o.dc;
          if (y < 0 || y >= h || x < 0 || x >= w) continue;
          const double v = image.at(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
          best = any ? pick(best, v) : v;
          any = true;
        }
        // A mask-only neighborhood can fall fully outside the image near the
        // border; the pixel itself is the only sensible value there.
        out.at(ch, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
            any ? best : image.at(ch, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return out;
}

}  // namespace

Tensor erode(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return neighborhood_filter(image, se, policy, [](double a, double b) { return std::min(a, b); });
}

Tensor dilate(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return neighborhood_filter(image, se, policy, [](double a, double b) { return std::max(a, b); });
}

Tensor opening(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return dilate(erode(image, se, policy), se, policy);
}

Tensor closing(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return erode(dilate(image, se, policy), se, policy);
}

Tensor white_tophat(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return elementwise(ElementwiseOp::subtract, image, opening(image, se, policy));
}

Tensor black_tophat(const Tensor& image, const StructuringElement& se, CenterPolicy policy) {
  return elementwise(ElementwiseOp::subtract, closing(image, se, policy), image);
}

Tensor reconstruct(ReconstructionKind kind, const Tensor& image, const StructuringElement& se,
                   const StructuringElement& elementary, CenterPolicy policy) {
  const bool by_erosion = kind == ReconstructionKind::by_erosion;
  Tensor marker = by_erosion ? dilate(image, se, policy) : erode(image, se, policy);
  const std::size_t bound = image.height() * image.width() + 1;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > bound) throw std::logic_error("geodesic reconstruction failed to converge");
    Tensor next = by_erosion
                      ? elementwise(ElementwiseOp::max, erode(marker, elementary, policy), image)
                      : elementwise(ElementwiseOp::min, dilate(marker, elementary, policy), image);
    if (next == marker) return marker;
    marker = std::move(next);
  }
}

Tensor reconstruct_approx(ReconstructionKind kind, const Tensor& image,
                          const StructuringElement& se, const StructuringElement& se_prime,
                          CenterPolicy policy) {
  if (kind == ReconstructionKind::by_erosion) {
    return elementwise(ElementwiseOp::max, erode(dilate(image, se, policy), se_prime, policy),
                       image);
  }
  return elementwise(ElementwiseOp::min, dilate(erode(image, se, policy), se_prime, policy),
                     image);
}

}  // namespace dmn::classical
