#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane_size() const { return height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense rank-3 tensor (channels x height x width), row-major per channel.
///
/// A default-constructed tensor is an empty placeholder; every tensor built
/// from a shape has all dimensions >= 1 and owns exactly c*h*w values.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t c, std::size_t i, std::size_t j) {
    return data_[(c * shape_.height + i) * shape_.width + j];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * shape_.height + i) * shape_.width + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(std::size_t c);
  std::span<const double> plane(std::size_t c) const;
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  /// Same data viewed under another shape with the same element count.
  Tensor reshaped(Shape shape) const;
  /// Single channel c as a 1-channel tensor.
  Tensor channel(std::size_t c) const;

  double sum() const;
  double min() const;
  double max() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

/// Stack 1-channel (or multi-channel) tensors of identical spatial size along channels.
Tensor concat_channels(std::span<const Tensor> parts);

std::size_t conv_output_dim(std::size_t dim, std::size_t kernel, std::size_t stride,
                            std::size_t padding);

// Convolutions are cross-correlations over a zero-padded input, as in every
// deep-learning framework.

/// kernels[k] has shape (input.channels, s_h, s_w); bias may be empty.
Tensor conv2d_standard(const Tensor& input, std::span<const Tensor> kernels,
                       std::size_t stride, std::size_t padding,
                       std::span<const double> bias = {});

struct StandardConvGrads {
  Tensor input;
  std::vector<Tensor> kernels;
  std::vector<double> bias;
};

StandardConvGrads conv2d_standard_backward(const Tensor& input, std::span<const Tensor> kernels,
                                           std::size_t stride, std::size_t padding,
                                           const Tensor& grad_out);

/// bank has shape (k, s, s); output channel f*c + l is filter f over input channel l.
Tensor conv2d_depthwise(const Tensor& input, const Tensor& bank, std::size_t stride,
                        std::size_t padding);

/// weights is c_out x c row-major, bias has c_out entries.
Tensor conv2d_pointwise(const Tensor& input, std::span<const double> weights,
                        std::span<const double> bias);

enum class ElementwiseOp { max, min, subtract, add };

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);

Tensor scaled(const Tensor& a, double factor);

}  // namespace dmn
