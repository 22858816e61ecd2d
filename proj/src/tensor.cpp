#include "dmn/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace dmn {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

namespace {

void check_dims(const Shape& s) {
  if (s.channels == 0 || s.height == 0 || s.width == 0) {
    throw ShapeError("tensor dimensions must be >= 1, got " + s.str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

}  // namespace

Tensor::Tensor(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : Tensor(Shape{channels, height, width}, fill) {}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  check_dims(shape_);
  data_.assign(shape_.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  check_dims(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

std::span<double> Tensor::plane(std::size_t c) {
  return std::span<double>(data_).subspan(c * shape_.plane_size(), shape_.plane_size());
}

std::span<const double> Tensor::plane(std::size_t c) const {
  return std::span<const double>(data_).subspan(c * shape_.plane_size(), shape_.plane_size());
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.size() != data_.size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

Tensor Tensor::channel(std::size_t c) const {
  if (c >= shape_.channels) throw ShapeError("channel index out of range");
  auto p = plane(c);
  return Tensor(Shape{1, shape_.height, shape_.width}, std::vector<double>(p.begin(), p.end()));
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
double Tensor::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Tensor::max() const { return *std::max_element(data_.begin(), data_.end()); }

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: nothing to concatenate");
  const std::size_t h = parts.front().height();
  const std::size_t w = parts.front().width();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.height() != h || p.width() != w) {
      throw ShapeError("concat_channels: spatial mismatch " + p.shape().str());
    }
    c += p.channels();
  }
  std::vector<double> values;
  values.reserve(c * h * w);
  for (const auto& p : parts) values.insert(values.end(), p.data().begin(), p.data().end());
  return Tensor(Shape{c, h, w}, std::move(values));
}

std::size_t conv_output_dim(std::size_t dim, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  if (stride == 0) throw ShapeError("stride must be positive");
  if (kernel == 0) throw ShapeError("kernel size must be positive");
  if (dim + 2 * padding < kernel) {
    throw ShapeError("kernel " + std::to_string(kernel) + " larger than padded input " +
                     std::to_string(dim + 2 * padding));
  }
  return (dim + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d_standard(const Tensor& input, std::span<const Tensor> kernels, std::size_t stride,
                       std::size_t padding, std::span<const double> bias) {
  if (kernels.empty()) throw ShapeError("conv2d_standard: no kernels");
  const std::size_t c = input.channels();
  const std::size_t kh = kernels.front().height();
  const std::size_t kw = kernels.front().width();
  for (const auto& k : kernels) {
    if (k.channels() != c || k.height() != kh || k.width() != kw) {
      throw ShapeError("conv2d_standard: kernel " + k.shape().str() + " incompatible with input " +
                       input.shape().str());
    }
  }
  if (!bias.empty() && bias.size() != kernels.size()) {
    throw ShapeError("conv2d_standard: bias length differs from kernel count");
  }
  const std::size_t oh = conv_output_dim(input.height(), kh, stride, padding);
  const std::size_t ow = conv_output_dim(input.width(), kw, stride, padding);
  const auto ih = static_cast<std::ptrdiff_t>(input.height());
  const auto iw = static_cast<std::ptrdiff_t>(input.width());
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  Tensor out(kernels.size(), oh, ow);
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const Tensor& ker = kernels[k];
    const double b = bias.empty() ? 0.0 : bias[k];
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = b;
        const auto y0 = static_cast<std::ptrdiff_t>(i * stride) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(j * stride) - pad;
        for (std::size_t l = 0; l < c; ++l) {
          for (std::size_t m = 0; m < kh; ++m) {
            const auto y = y0 + static_cast<std::ptrdiff_t>(m);
            if (y < 0 || y >= ih) continue;
            for (std::size_t n = 0; n < kw; ++n) {
              const auto x = x0 + static_cast<std::ptrdiff_t>(n);
              if (x < 0 || x >= iw) continue;
              acc += ker.at(l, m, n) * input.at(l, static_cast<std::size_t>(y),
                                                static_cast<std::size_t>(x));
            }
          }
        }
        out.at(k, i, j) = acc;
      }
    }
  }
  return out;
}

StandardConvGrads conv2d_standard_backward(const Tensor& input, std::span<const Tensor> kernels,
                                           std::size_t stride, std::size_t padding,
                                           const Tensor& grad_out) {
  const std::size_t c = input.channels();
  const std::size_t kh = kernels.front().height();
  const std::size_t kw = kernels.front().width();
  const std::size_t oh = conv_output_dim(input.height(), kh, stride, padding);
  const std::size_t ow = conv_output_dim(input.width(), kw, stride, padding);
  if (grad_out.shape() != Shape{kernels.size(), oh, ow}) {
    throw ShapeError("conv2d_standard_backward: gradient shape " + grad_out.shape().str());
  }
  const auto ih = static_cast<std::ptrdiff_t>(input.height());
  const auto iw = static_cast<std::ptrdiff_t>(input.width());
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  StandardConvGrads g;
  g.input = Tensor(input.shape());
  g.bias.assign(kernels.size(), 0.0);
  g.kernels.reserve(kernels.size());
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    Tensor gk(kernels[k].shape());
    const Tensor& ker = kernels[k];
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double go = grad_out.at(k, i, j);
        if (go == 0.0) continue;
        g.bias[k] += go;
        const auto y0 = static_cast<std::ptrdiff_t>(i * stride) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(j * stride) - pad;
        for (std::size_t l = 0; l < c; ++l) {
          for (std::size_t m = 0; m < kh; ++m) {
            const auto y = y0 + static_cast<std::ptrdiff_t>(m);
            if (y < 0 || y >= ih) continue;
            for (std::size_t n = 0; n < kw; ++n) {
              const auto x = x0 + static_cast<std::ptrdiff_t>(n);
              if (x < 0 || x >= iw) continue;
              const auto yy = static_cast<std::size_t>(y);
              const auto xx = static_cast<std::size_t>(x);
              gk.at(l, m, n) += go * input.at(l, yy, xx);
              g.input.at(l, yy, xx) += go * ker.at(l, m, n);
            }
          }
        }
      }
    }
    g.kernels.push_back(std::move(gk));
  }
  return g;
}

Tensor conv2d_depthwise(const Tensor& input, const Tensor& bank, std::size_t stride,
                        std::size_t padding) {
  const std::size_t c = input.channels();
  const std::size_t k = bank.channels();
  const std::size_t kh = bank.height();
  const std::size_t kw = bank.width();
  const std::size_t oh = conv_output_dim(input.height(), kh, stride, padding);
  const std::size_t ow = conv_output_dim(input.width(), kw, stride, padding);
  const auto ih = static_cast<std::ptrdiff_t>(input.height());
  const auto iw = static_cast<std::ptrdiff_t>(input.width());
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  Tensor out(k * c, oh, ow);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t l = 0; l < c; ++l) {
      const std::size_t oc = f * c + l;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          const auto y0 = static_cast<std::ptrdiff_t>(i * stride) - pad;
          const auto x0 = static_cast<std::ptrdiff_t>(j * stride) - pad;
          for (std::size_t m = 0; m < kh; ++m) {
            const auto y = y0 + static_cast<std::ptrdiff_t>(m);
            if (y < 0 || y >= ih) continue;
            for (std::size_t n = 0; n < kw; ++n) {
              const auto x = x0 + static_cast<std::ptrdiff_t>(n);
              if (x < 0 || x >= iw) continue;
              acc += bank.at(f, m, n) *
                     input.at(l, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            }
          }
          out.at(oc, i, j) = acc;
        }
      }
    }
  }
  return out;
}

Tensor conv2d_pointwise(const Tensor& input, std::span<const double> weights,
                        std::span<const double> bias) {
  const std::size_t c = input.channels();
  if (c == 0 || weights.size() % c != 0) {
    throw ShapeError("conv2d_pointwise: weight count " + std::to_string(weights.size()) +
                     " is not a multiple of input channels " + std::to_string(c));
  }
  const std::size_t c_out = weights.size() / c;
  if (bias.size() != c_out) {
    throw ShapeError("conv2d_pointwise: bias length " + std::to_string(bias.size()) +
                     " differs from output channels " + std::to_string(c_out));
  }
  const std::size_t n = input.shape().plane_size();
  Tensor out(c_out, input.height(), input.width());
  for (std::size_t o = 0; o < c_out; ++o) {
    auto dst = out.plane(o);
    std::fill(dst.begin(), dst.end(), bias[o]);
    for (std::size_t l = 0; l < c; ++l) {
      const double w = weights[o * c + l];
      auto src = input.plane(l);
      for (std::size_t p = 0; p < n; ++p) dst[p] += w * src[p];
    }
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise");
  Tensor out(a.shape());
  auto da = a.data();
  auto db = b.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    switch (op) {
      case ElementwiseOp::max: dst[p] = std::max(da[p], db[p]); break;
      case ElementwiseOp::min: dst[p] = std::min(da[p], db[p]); break;
      case ElementwiseOp::subtract: dst[p] = da[p] - db[p]; break;
      case ElementwiseOp::add: dst[p] = da[p] + db[p]; break;
    }
  }
  return out;
}

Tensor scaled(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& v : out.data()) v *= factor;
  return out;
}

}  // namespace dmn
