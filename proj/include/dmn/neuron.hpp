#pragma once

#include <optional>
#include <string>

#include "dmn/framework.hpp"
#include "dmn/parameter.hpp"
#include "dmn/rng.hpp"

namespace dmn {

enum class NeuronKind {
  composed_erosion_first,   // dilation(W2, erosion(W1, y))
  composed_dilation_first,  // erosion(W2, dilation(W1, y))
  opening,
  closing,
  white_tophat,
  black_tophat,
  rec_by_erosion,   // max(erosion(W', dilation(W, y)), y)
  rec_by_dilation,  // min(dilation(W', erosion(W, y)), y)
};

std::string to_string(NeuronKind kind);
NeuronKind parse_neuron_kind(const std::string& name);
/// Composed kinds own two banks; every other kind ties stage 2 to stage 1.
bool has_independent_banks(NeuronKind kind);
bool has_skip_connection(NeuronKind kind);

struct NeuronSpec {
  NeuronKind kind = NeuronKind::opening;
  std::size_t side = 3;
  std::size_t stride1 = 1;
  std::size_t padding1 = 1;
  std::size_t stride2 = 1;
  std::size_t padding2 = 1;
  /// Reconstruction kinds: run stage 2 with the recovered SE dilated by a 3x3 square.
  bool reconstruction_dilate_se = true;

  static NeuronSpec same_size(NeuronKind kind, std::size_t side) {
    return NeuronSpec{kind, side, 1, side / 2, 1, side / 2, true};
  }
};

/// Everything backward needs from one forward pass.
struct NeuronCache {
  Tensor input;
  BinaryBank bank1{1, {0}};
  BinaryBank bank2{1, {0}};  // bank actually used in stage 2 (dilated for reconstructions)
  std::size_t padding2 = 0;  // padding actually used in stage 2
  MorphResult stage1;
  MorphResult stage2;
  Tensor core;  // per-channel morphology before the pointwise collapse
};

/// One morphological processing unit: two framework stages, an optional skip
/// connection, and a pointwise convolution collapsing c channels into one map.
class MorphNeuron {
 public:
  MorphNeuron(NeuronSpec spec, Shape input_shape, const std::string& name);

  const NeuronSpec& spec() const { return spec_; }
  Shape input_shape() const { return input_shape_; }
  Shape stage1_shape() const { return stage1_shape_; }
  Shape output_shape() const { return Shape{1, out_h_, out_w_}; }

  /// Banks uniform in [0, 1); pointwise weights uniform in +-1/sqrt(c); bias 0.
  void initialize(Rng& rng);

  Tensor forward(const Tensor& input, NeuronCache* cache = nullptr) const;
  /// Accumulates into the parameters' gradients and returns d loss / d input.
  Tensor backward(const NeuronCache& cache, const Tensor& grad_out);

  BinaryBank stage1_bank() const;
  /// Bank stage 2 runs with (dilated for reconstruction kinds when enabled).
  BinaryBank stage2_bank() const;
  /// Stage-2 bank before any reconstruction dilation.
  BinaryBank stage2_base_bank() const;

  Parameter& bank1() { return bank1_; }
  const Parameter& bank1() const { return bank1_; }
  /// Null for tied kinds.
  Parameter* bank2() { return bank2_ ? &*bank2_ : nullptr; }
  const Parameter* bank2() const { return bank2_ ? &*bank2_ : nullptr; }
  Parameter& pointwise_weights() { return pw_weights_; }
  const Parameter& pointwise_weights() const { return pw_weights_; }
  Parameter& pointwise_bias() { return pw_bias_; }
  const Parameter& pointwise_bias() const { return pw_bias_; }

  std::vector<Parameter*> parameters();

 private:
  bool stage2_dilated() const;
  MorphDirection stage1_direction() const;
  MorphDirection stage2_direction() const;

  NeuronSpec spec_;
  Shape input_shape_;
  Shape stage1_shape_;
  std::size_t out_h_ = 0;
  std::size_t out_w_ = 0;
  Parameter bank1_;
  std::optional<Parameter> bank2_;
  Parameter pw_weights_;
  Parameter pw_bias_;
};

}  // namespace dmn
