#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmn/neuron.hpp"
#include "dmn/parameter.hpp"
#include "dmn/rng.hpp"
#include "dmn/sample.hpp"
#include "dmn/tensor.hpp"

namespace dmn {

// ---- stateless kernels -----------------------------------------------------

/// weights is out x in row-major.
std::vector<double> fully_connected_forward(std::span<const double> weights,
                                            std::span<const double> bias,
                                            std::span<const double> input);

struct FullyConnectedGrads {
  std::vector<double> input;
  std::vector<double> weights;
  std::vector<double> bias;
};

FullyConnectedGrads fully_connected_backward(std::span<const double> weights,
                                             std::span<const double> input,
                                             std::span<const double> grad_out);

Tensor relu_forward(const Tensor& x);
/// Gradient passes only where x > 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // softmax - one_hot
};

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t target);

struct MaxPoolResult {
  Tensor output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// Window scan with no padding; ties go to the first cell in row-major order.
MaxPoolResult maxpool2d_forward(const Tensor& input, std::size_t window, std::size_t stride);
Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                          const Tensor& grad_out);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// ---- layers ------------------------------------------------------------------

/// A layer caches what its most recent forward pass needs for backward.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Shape input_shape() const = 0;
  virtual Shape output_shape() const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  /// Accumulates parameter gradients and returns d loss / d input.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(Rng&) {}
};

class FullyConnected final : public Layer {
 public:
  FullyConnected(std::size_t in, std::size_t out, const std::string& name);
  std::string kind() const override { return "fc"; }
  Shape input_shape() const override { return Shape{in_, 1, 1}; }
  Shape output_shape() const override { return Shape{out_, 1, 1}; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weights_, &bias_}; }
  void initialize(Rng& rng) override;

  Parameter& weights() { return weights_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Parameter weights_;
  Parameter bias_;
  Tensor input_;
};

class ReLU final : public Layer {
 public:
  explicit ReLU(Shape shape) : shape_(shape) {}
  std::string kind() const override { return "relu"; }
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape shape_;
  Tensor input_;
};

/// Channel-major, then row-major: (c, h, w) -> (c*h*w, 1, 1).
class Flatten final : public Layer {
 public:
  explicit Flatten(Shape shape) : shape_(shape) {}
  std::string kind() const override { return "flatten"; }
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return Shape{shape_.size(), 1, 1}; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape shape_;
};

class MaxPool2d final : public Layer {
 public:
  MaxPool2d(Shape input, std::size_t window, std::size_t stride);
  std::string kind() const override { return "maxpool"; }
  Shape input_shape() const override { return input_; }
  Shape output_shape() const override { return output_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_;
  Shape output_;
  std::size_t window_;
  std::size_t stride_;
  std::vector<std::uint32_t> argmax_;
};

class Conv2d final : public Layer {
 public:
  Conv2d(Shape input, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding, const std::string& name);
  std::string kind() const override { return "conv"; }
  Shape input_shape() const override { return input_; }
  Shape output_shape() const override { return output_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weights_, &bias_}; }
  void initialize(Rng& rng) override;

 private:
  std::vector<Tensor> kernels() const;

  Shape input_;
  Shape output_;
  std::size_t kernel_;
  std::size_t stride_;
  std::size_t padding_;
  Parameter weights_;  // (out, in, k, k)
  Parameter bias_;
  Tensor cached_input_;
};

/// A set of morphological neurons over the same input; one output plane per
/// neuron, no activation.
class MorphLayer final : public Layer {
 public:
  MorphLayer(Shape input, const std::vector<NeuronSpec>& specs, const std::string& name);
  std::string kind() const override { return "morph"; }
  Shape input_shape() const override { return input_; }
  Shape output_shape() const override { return output_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;

  std::vector<MorphNeuron>& neurons() { return neurons_; }
  const std::vector<MorphNeuron>& neurons() const { return neurons_; }
  /// Cache of neuron n from the last forward pass.
  const NeuronCache& cache(std::size_t n) const { return caches_.at(n); }

 private:
  Shape input_;
  Shape output_;
  std::vector<MorphNeuron> neurons_;
  std::vector<NeuronCache> caches_;
};

// ---- network -----------------------------------------------------------------

class Network {
 public:
  Network(std::string name, Shape input_shape, std::size_t classes);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const std::string& name() const { return name_; }
  Shape input_shape() const { return input_shape_; }
  std::size_t classes() const { return classes_; }

  /// Appends a layer; its input shape must equal the current output shape.
  void add(std::unique_ptr<Layer> layer);
  Shape output_shape() const;

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Logits as a flat vector.
  std::vector<double> forward(const Tensor& input);
  void backward(std::span<const double> grad_logits);

  std::vector<Parameter*> parameters();
  std::size_t parameter_count();
  void initialize(std::uint64_t seed);
  void zero_grad();

 private:
  std::string name_;
  Shape input_shape_;
  std::size_t classes_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---- training ------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 0.0005;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// v <- m*v - lr*(g + wd*w); w <- w + v; then zero the gradient.
void sgd_step(std::span<Parameter* const> params, const TrainConfig& config);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Percentage of samples whose argmax logit equals the label.
double evaluate(Network& net, std::span<const Sample> samples);

/// Minibatch SGD with averaged gradients. `progress`, when given, receives one
/// line per epoch.
Metrics train(Network& net, const Split& split, const TrainConfig& config,
              std::ostream* progress = nullptr);

void write_metrics_csv(const Metrics& metrics, std::ostream& out);
std::string format_accuracy(double percent);

// ---- gradient check --------------------------------------------------------

struct GradcheckGroup {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double max_rel_error = 0.0;
};

/// Sets every bias uniformly in [-scale, scale]. Gradient checks use it to
/// step off the pooling ties that zero biases form with zero padding.
void jitter_biases(Network& net, std::uint64_t seed, double scale = 0.1);

/// Central differences on the softmax cross-entropy of one sample, for every
/// parameter whose role admits finite differences. At most `max_entries`
/// entries per parameter are probed, chosen by `seed`. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
GradcheckReport gradcheck(Network& net, const Tensor& input, std::size_t label,
                          double epsilon = 1e-5, std::size_t max_entries = 16,
                          std::uint64_t seed = 0);

}  // namespace dmn
