#include "dmn/neuron.hpp"

#include <cmath>
#include <stdexcept>

namespace dmn {

std::string to_string(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::composed_erosion_first: return "composed_erosion_first";
    case NeuronKind::composed_dilation_first: return "composed_dilation_first";
    case NeuronKind::opening: return "opening";
    case NeuronKind::closing: return "closing";
    case NeuronKind::white_tophat: return "white_tophat";
    case NeuronKind::black_tophat: return "black_tophat";
    case NeuronKind::rec_by_erosion: return "rec_by_erosion";
    case NeuronKind::rec_by_dilation: return "rec_by_dilation";
  }
  return "?";
}

NeuronKind parse_neuron_kind(const std::string& name) {
  for (auto k : {NeuronKind::composed_erosion_first, NeuronKind::composed_dilation_first,
                 NeuronKind::opening, NeuronKind::closing, NeuronKind::white_tophat,
                 NeuronKind::black_tophat, NeuronKind::rec_by_erosion,
                 NeuronKind::rec_by_dilation}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown neuron kind '" + name + "'");
}

bool has_independent_banks(NeuronKind kind) {
  return kind == NeuronKind::composed_erosion_first || kind == NeuronKind::composed_dilation_first;
}

bool has_skip_connection(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::white_tophat:
    case NeuronKind::black_tophat:
    case NeuronKind::rec_by_erosion:
    case NeuronKind::rec_by_dilation: return true;
    default: return false;
  }
}

namespace {

bool is_reconstruction(NeuronKind kind) {
  return kind == NeuronKind::rec_by_erosion || kind == NeuronKind::rec_by_dilation;
}

}  // namespace

MorphNeuron::MorphNeuron(NeuronSpec spec, Shape input_shape, const std::string& name)
    : spec_(spec), input_shape_(input_shape) {
  if (spec_.side == 0 || spec_.stride1 == 0 || spec_.stride2 == 0) {
    throw ShapeError(name + ": kernel side and strides must be positive");
  }
  if (input_shape_.size() == 0) throw ShapeError(name + ": empty input shape");
  const std::size_t s = spec_.side;
  stage1_shape_ = Shape{input_shape_.channels,
                        conv_output_dim(input_shape_.height, s, spec_.stride1, spec_.padding1),
                        conv_output_dim(input_shape_.width, s, spec_.stride1, spec_.padding1)};
  out_h_ = conv_output_dim(stage1_shape_.height, s, spec_.stride2, spec_.padding2);
  out_w_ = conv_output_dim(stage1_shape_.width, s, spec_.stride2, spec_.padding2);

  if (has_skip_connection(spec_.kind)) {
    const bool aligned = stage1_shape_ == input_shape_ && out_h_ == input_shape_.height &&
                         out_w_ == input_shape_.width && spec_.stride1 == 1 &&
                         spec_.stride2 == 1;
    if (!aligned) {
      throw ShapeError(name + ": " + to_string(spec_.kind) +
                       " needs both stages to preserve the input shape (odd side, stride 1, "
                       "padding side/2); input " + input_shape_.str() + ", output 1x" +
                       std::to_string(out_h_) + "x" + std::to_string(out_w_));
    }
  }

  const std::size_t c = input_shape_.channels;
  bank1_ = Parameter(name + ".bank1", {s * s, s, s}, ParamRole::morph_bank);
  if (has_independent_banks(spec_.kind)) {
    bank2_ = Parameter(name + ".bank2", {s * s, s, s}, ParamRole::morph_bank);
  }
  pw_weights_ = Parameter(name + ".pw_weight", {1, c}, ParamRole::weight);
  pw_bias_ = Parameter(name + ".pw_bias", {1}, ParamRole::bias);
}

void MorphNeuron::initialize(Rng& rng) {
  for (double& v : bank1_.value) v = rng.uniform();
  if (bank2_) {
    for (double& v : bank2_->value) v = rng.uniform();
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_shape_.channels));
  for (double& v : pw_weights_.value) v = rng.uniform(-bound, bound);
  for (double& v : pw_bias_.value) v = 0.0;
}

std::vector<Parameter*> MorphNeuron::parameters() {
  std::vector<Parameter*> out{&bank1_};
  if (bank2_) out.push_back(&*bank2_);
  out.push_back(&pw_weights_);
  out.push_back(&pw_bias_);
  return out;
}

bool MorphNeuron::stage2_dilated() const {
  return is_reconstruction(spec_.kind) && spec_.reconstruction_dilate_se;
}

MorphDirection MorphNeuron::stage1_direction() const {
  switch (spec_.kind) {
    case NeuronKind::composed_erosion_first:
    case NeuronKind::opening:
    case NeuronKind::white_tophat:
    case NeuronKind::rec_by_dilation: return MorphDirection::erosion;
    default: return MorphDirection::dilation;
  }
}

MorphDirection MorphNeuron::stage2_direction() const {
  return stage1_direction() == MorphDirection::erosion ? MorphDirection::dilation
                                                       : MorphDirection::erosion;
}

BinaryBank MorphNeuron::stage1_bank() const { return binarize_bank(bank1_.value, spec_.side); }

BinaryBank MorphNeuron::stage2_base_bank() const {
  return binarize_bank(bank2_ ? bank2_->value : bank1_.value, spec_.side);
}

BinaryBank MorphNeuron::stage2_bank() const {
  BinaryBank base = stage2_base_bank();
  if (!stage2_dilated()) return base;
  return bank_from_se(dilate_se_for_reconstruction(recover_se(base)));
}

Tensor MorphNeuron::forward(const Tensor& input, NeuronCache* cache) const {
  if (input.shape() != input_shape_) {
    throw ShapeError("morphological neuron expects " + input_shape_.str() + ", got " +
                     input.shape().str());
  }
  NeuronCache local;
  NeuronCache& c = cache ? *cache : local;
  c.input = input;
  c.bank1 = stage1_bank();
  c.bank2 = stage2_bank();
  c.padding2 = spec_.padding2 + (stage2_dilated() ? 1 : 0);
  c.stage1 = framework_morph(stage1_direction(), c.bank1, spec_.stride1, spec_.padding1, input);
  c.stage2 = framework_morph(stage2_direction(), c.bank2, spec_.stride2, c.padding2,
                             c.stage1.output);

  switch (spec_.kind) {
    case NeuronKind::white_tophat:
      c.core = elementwise(ElementwiseOp::subtract, input, c.stage2.output);
      break;
    case NeuronKind::black_tophat:
      c.core = elementwise(ElementwiseOp::subtract, c.stage2.output, input);
      break;
    case NeuronKind::rec_by_erosion:
      c.core = elementwise(ElementwiseOp::max, c.stage2.output, input);
      break;
    case NeuronKind::rec_by_dilation:
      c.core = elementwise(ElementwiseOp::min, c.stage2.output, input);
      break;
    default: c.core = c.stage2.output; break;
  }
  return conv2d_pointwise(c.core, pw_weights_.value, pw_bias_.value);
}

Tensor MorphNeuron::backward(const NeuronCache& cache, const Tensor& grad_out) {
  const Shape out_shape = output_shape();
  if (grad_out.shape() != out_shape) {
    throw ShapeError("morphological neuron gradient " + grad_out.shape().str() + " vs output " +
                     out_shape.str());
  }
  const std::size_t c = input_shape_.channels;
  const std::size_t n = out_shape.plane_size();
  const auto g = grad_out.plane(0);

  Tensor grad_core(cache.core.shape());
  for (std::size_t l = 0; l < c; ++l) {
    const auto core = cache.core.plane(l);
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += g[p] * core[p];
    pw_weights_.grad[l] += acc;
    const double w = pw_weights_.value[l];
    auto gc = grad_core.plane(l);
    for (std::size_t p = 0; p < n; ++p) gc[p] = w * g[p];
  }
  double gb = 0.0;
  for (std::size_t p = 0; p < n; ++p) gb += g[p];
  pw_bias_.grad[0] += gb;

  Tensor grad_input(input_shape_);
  Tensor grad_stage2(cache.stage2.output.shape());
  {
    auto gc = grad_core.data();
    auto gi = grad_input.data();
    auto g2 = grad_stage2.data();
    auto s2 = cache.stage2.output.data();
    auto in = cache.input.data();
    switch (spec_.kind) {
      case NeuronKind::white_tophat:
        for (std::size_t p = 0; p < gc.size(); ++p) {
          gi[p] += gc[p];
          g2[p] = -gc[p];
        }
        break;
      case NeuronKind::black_tophat:
        for (std::size_t p = 0; p < gc.size(); ++p) {
          gi[p] -= gc[p];
          g2[p] = gc[p];
        }
        break;
      case NeuronKind::rec_by_erosion:
        // exact ties go to the skip operand
        for (std::size_t p = 0; p < gc.size(); ++p) {
          if (s2[p] > in[p]) g2[p] = gc[p]; else gi[p] += gc[p];
        }
        break;
      case NeuronKind::rec_by_dilation:
        for (std::size_t p = 0; p < gc.size(); ++p) {
          if (s2[p] < in[p]) g2[p] = gc[p]; else gi[p] += gc[p];
        }
        break;
      default: std::copy(gc.begin(), gc.end(), g2.begin()); break;
    }
  }

  MorphGrads s2 = framework_morph_backward(cache.bank2, spec_.stride2, cache.padding2,
                                           cache.stage1.output, cache.stage2.trace, grad_stage2);
  if (stage2_dilated()) {
    // The dilated bank is derived, not learned: its weight gradient is taken
    // as if stage 2 had pooled over the undilated binary bank.
    const BinaryBank base = stage2_base_bank();
    const MorphResult shadow = framework_morph(stage2_direction(), base, spec_.stride2,
                                               spec_.padding2, cache.stage1.output);
    s2.bank = framework_morph_backward(base, spec_.stride2, spec_.padding2, cache.stage1.output,
                                       shadow.trace, grad_stage2)
                  .bank;
  }
  Parameter& target2 = bank2_ ? *bank2_ : bank1_;
  for (std::size_t k = 0; k < s2.bank.size(); ++k) target2.grad[k] += s2.bank[k];

  MorphGrads s1 = framework_morph_backward(cache.bank1, spec_.stride1, spec_.padding1,
                                           cache.input, cache.stage1.trace, s2.input);
  for (std::size_t k = 0; k < s1.bank.size(); ++k) bank1_.grad[k] += s1.bank[k];
  auto gi = grad_input.data();
  auto g1 = s1.input.data();
  for (std::size_t p = 0; p < gi.size(); ++p) gi[p] += g1[p];
  return grad_input;
}

}  // namespace dmn
