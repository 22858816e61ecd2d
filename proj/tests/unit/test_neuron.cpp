#include <vector>

#include "doctest.h"
#include "dmn/neuron.hpp"
#include "dmn/nn.hpp"
#include "support.hpp"

using namespace dmn;
using classical::CenterPolicy;
using classical::ReconstructionKind;

namespace {

constexpr NeuronKind kAllKinds[] = {
    NeuronKind::composed_erosion_first, NeuronKind::composed_dilation_first,
    NeuronKind::opening,                NeuronKind::closing,
    NeuronKind::white_tophat,           NeuronKind::black_tophat,
    NeuronKind::rec_by_erosion,         NeuronKind::rec_by_dilation};

// Classical-morphology rendition of a neuron core with the given SEs.
Tensor oracle_core(NeuronKind kind, const Tensor& x, const classical::StructuringElement& b1,
                   const classical::StructuringElement& b2) {
  using namespace classical;
  const auto mo = CenterPolicy::mask_only;
  switch (kind) {
    case NeuronKind::composed_erosion_first: return dilate(erode(x, b1, mo), b2, mo);
    case NeuronKind::composed_dilation_first: return erode(dilate(x, b1, mo), b2, mo);
    case NeuronKind::opening: return opening(x, b1, mo);
    case NeuronKind::closing: return closing(x, b1, mo);
    case NeuronKind::white_tophat: return white_tophat(x, b1, mo);
    case NeuronKind::black_tophat: return black_tophat(x, b1, mo);
    case NeuronKind::rec_by_erosion:
      return reconstruct_approx(ReconstructionKind::by_erosion, x, b1,
                                dilate_se_for_reconstruction(b1), mo);
    case NeuronKind::rec_by_dilation:
      return reconstruct_approx(ReconstructionKind::by_dilation, x, b1,
                                dilate_se_for_reconstruction(b1), mo);
  }
  return {};
}

MorphNeuron frozen_neuron(NeuronKind kind, std::size_t side, Shape in, Rng& rng,
                          const BinaryBank& b1, const BinaryBank& b2) {
  MorphNeuron n(NeuronSpec::same_size(kind, side), in, "n");
  n.initialize(rng);
  test::set_bank(n.bank1(), b1);
  if (n.bank2()) test::set_bank(*n.bank2(), b2);
  return n;
}

double weighted_sum(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) s += y.data()[p] * r.data()[p];
  return s;
}

}  // namespace

TEST_CASE("neuron kind names and bank tying") {
  for (auto k : kAllKinds) CHECK(parse_neuron_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_neuron_kind("median"), std::invalid_argument);
  CHECK(has_independent_banks(NeuronKind::composed_dilation_first));
  CHECK_FALSE(has_independent_banks(NeuronKind::white_tophat));
  CHECK(has_skip_connection(NeuronKind::rec_by_dilation));
  CHECK_FALSE(has_skip_connection(NeuronKind::closing));
}

TEST_CASE("neuron parameters") {
  MorphNeuron composed(NeuronSpec::same_size(NeuronKind::composed_erosion_first, 5),
                       Shape{3, 8, 8}, "l0.n0");
  CHECK(composed.parameters().size() == 4);
  CHECK(composed.bank1().name == "l0.n0.bank1");
  CHECK(composed.bank1().size() == 625);
  MorphNeuron tied(NeuronSpec::same_size(NeuronKind::opening, 5), Shape{3, 8, 8}, "x");
  CHECK(tied.bank2() == nullptr);
  CHECK(tied.parameters().size() == 3);
  CHECK(tied.pointwise_weights().size() == 3);
}

TEST_CASE("skip kinds need an input-preserving shape") {
  NeuronSpec spec{NeuronKind::white_tophat, 3, 2, 1, 1, 1, true};
  CHECK_THROWS_AS(MorphNeuron(spec, Shape{1, 8, 8}, "n"), ShapeError);
  spec.kind = NeuronKind::composed_erosion_first;
  CHECK_NOTHROW(MorphNeuron(spec, Shape{1, 8, 8}, "n"));
}

TEST_CASE("opening neuron with a square bank equals the classical opening") {
  Rng rng(1);
  const auto sq3 = classical::make_se(classical::SeShape::square, 3);
  const Tensor x = test::random_tensor(rng, Shape{1, 10, 10});
  MorphNeuron n = frozen_neuron(NeuronKind::opening, 3, x.shape(), rng, bank_from_se(sq3),
                                bank_from_se(sq3));
  n.pointwise_weights().value = {1.0};
  n.pointwise_bias().value = {0.0};
  CHECK(test::interior_equal(n.forward(x), classical::opening(x, sq3), 2));
}

TEST_CASE("white top-hat of a constant image is zero") {
  Rng rng(2);
  const Tensor flat(2, 9, 9, 0.6);
  MorphNeuron n = frozen_neuron(NeuronKind::white_tophat, 3, flat.shape(), rng,
                                test::random_bank(rng, 3), test::random_bank(rng, 3));
  NeuronCache cache;
  n.forward(flat, &cache);
  CHECK(test::interior_equal(cache.core, Tensor(flat.shape()), 2));
}

TEST_CASE("reconstruction by erosion dominates its stage-2 map") {
  Rng rng(3);
  const Tensor x = test::random_tensor(rng, Shape{1, 9, 9});
  MorphNeuron n = frozen_neuron(NeuronKind::rec_by_erosion, 3, x.shape(), rng,
                                test::random_bank(rng, 3), test::random_bank(rng, 3));
  NeuronCache cache;
  n.forward(x, &cache);
  bool tight = false;
  for (std::size_t p = 0; p < x.size(); ++p) {
    CHECK(cache.core.data()[p] >= cache.stage2.output.data()[p]);
    CHECK(cache.core.data()[p] == std::max(cache.stage2.output.data()[p], x.data()[p]));
    tight = tight || (x.data()[p] > cache.stage2.output.data()[p] && cache.core.data()[p] == x.data()[p]);
  }
  CHECK(tight);
}

TEST_CASE("neuron cores equal classical operators on the interior") {
  Rng rng(4);
  for (auto kind : kAllKinds) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t side = trial % 2 ? 3 : 5;
      const Tensor x = trial % 3 ? test::random_tensor(rng, Shape{2, 16, 15})
                                 : test::random_binary(rng, Shape{2, 16, 15});
      const BinaryBank b1 = test::random_bank(rng, side);
      const BinaryBank b2 = test::random_bank(rng, side);
      MorphNeuron n = frozen_neuron(kind, side, x.shape(), rng, b1, b2);
      NeuronCache cache;
      n.forward(x, &cache);
      const auto se1 = recover_se(b1);
      const auto se2 = has_independent_banks(kind) ? recover_se(b2) : se1;
      const bool rec = kind == NeuronKind::rec_by_erosion || kind == NeuronKind::rec_by_dilation;
      const std::size_t margin = side / 2 + side / 2 + (rec ? 1 : 0);
      CAPTURE(to_string(kind));
      CHECK(test::interior_equal(cache.core, oracle_core(kind, x, se1, se2), margin));
    }
  }
}

TEST_CASE("pointwise collapse of the per-channel core") {
  Rng rng(5);
  const Tensor x = test::random_tensor(rng, Shape{3, 8, 8});
  MorphNeuron n = frozen_neuron(NeuronKind::closing, 3, x.shape(), rng,
                                test::random_bank(rng, 3), test::random_bank(rng, 3));
  n.pointwise_bias().value = {0.25};
  NeuronCache cache;
  const Tensor y = n.forward(x, &cache);
  CHECK(y == conv2d_pointwise(cache.core, n.pointwise_weights().value, n.pointwise_bias().value));
}

TEST_CASE("pointwise gradients") {
  Rng rng(6);
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    const Tensor x = test::random_tensor(rng, Shape{3, 7, 7});
    MorphNeuron n = frozen_neuron(kind, 3, x.shape(), rng, test::random_bank(rng, 3),
                                  test::random_bank(rng, 3));
    NeuronCache cache;
    const Tensor y = n.forward(x, &cache);

    SUBCASE("sum loss gives per-channel core sums") {
      n.backward(cache, Tensor(y.shape(), 1.0));
      for (std::size_t l = 0; l < 3; ++l) {
        double s = 0.0;
        for (double v : cache.core.plane(l)) s += v;
        CHECK(test::rel_error(n.pointwise_weights().grad[l], s) < 1e-12);
      }
      CHECK(n.pointwise_bias().grad[0] == static_cast<double>(y.size()));
    }
    SUBCASE("finite differences") {
      const Tensor r = test::random_tensor(rng, y.shape(), -1, 1);
      n.backward(cache, r);
      for (Parameter* p : {&n.pointwise_weights(), &n.pointwise_bias()}) {
        for (std::size_t k = 0; k < p->size(); ++k) {
          const double keep = p->value[k];
          p->value[k] = keep + 1e-5;
          const double up = weighted_sum(n.forward(x), r);
          p->value[k] = keep - 1e-5;
          const double down = weighted_sum(n.forward(x), r);
          p->value[k] = keep;
          CHECK(test::rel_error(p->grad[k], (up - down) / 2e-5) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("input gradient agrees with finite differences away from ties") {
  Rng rng(7);
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    const Tensor x = test::random_tensor(rng, Shape{2, 7, 7}, 0.05, 1.0);
    MorphNeuron n = frozen_neuron(kind, 3, x.shape(), rng, test::random_bank(rng, 3),
                                  test::random_bank(rng, 3));
    NeuronCache cache;
    const Tensor y = n.forward(x, &cache);
    const Tensor r = test::random_tensor(rng, y.shape(), -1, 1);
    const Tensor gx = n.backward(cache, r);
    for (std::size_t q = 0; q < x.size(); ++q) {
      Tensor up = x, down = x;
      up.data()[q] += 1e-7;
      down.data()[q] -= 1e-7;
      const double numeric = (weighted_sum(n.forward(up), r) - weighted_sum(n.forward(down), r)) / 2e-7;
      CHECK(std::abs(numeric - gx.data()[q]) < 1e-6);
    }
  }
}

TEST_CASE("tied banks accumulate the gradients of both stages") {
  Rng rng(8);
  const Tensor x = test::random_tensor(rng, Shape{2, 8, 8});
  for (auto kind : {NeuronKind::opening, NeuronKind::closing}) {
    MorphNeuron n = frozen_neuron(kind, 3, x.shape(), rng, test::random_bank(rng, 3),
                                  test::random_bank(rng, 3));
    NeuronCache cache;
    const Tensor y = n.forward(x, &cache);
    const Tensor r = test::random_tensor(rng, y.shape(), -1, 1);
    n.backward(cache, r);

    Tensor g_core(cache.core.shape());
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t p = 0; p < y.size(); ++p)
        g_core.plane(l)[p] = r.data()[p] * n.pointwise_weights().value[l];
    const auto s2 = framework_morph_backward(cache.bank2, 1, 1, cache.stage1.output,
                                             cache.stage2.trace, g_core);
    const auto s1 =
        framework_morph_backward(cache.bank1, 1, 1, x, cache.stage1.trace, s2.input);
    for (std::size_t k = 0; k < n.bank1().size(); ++k)
      CHECK(test::rel_error(n.bank1().grad[k], s1.bank[k] + s2.bank[k]) < 1e-12);
  }
}

TEST_CASE("real bank weights move by the binary-filter gradient") {
  Rng rng(9);
  const Tensor x = test::random_tensor(rng, Shape{1, 8, 8});
  MorphNeuron n(NeuronSpec::same_size(NeuronKind::composed_dilation_first, 3), x.shape(), "n");
  n.initialize(rng);
  NeuronCache cache;
  const Tensor y = n.forward(x, &cache);
  n.backward(cache, test::random_tensor(rng, y.shape(), -1, 1));
  const std::vector<double> before = n.bank1().value;
  const std::vector<double> grad = n.bank1().grad;
  TrainConfig plain;
  plain.learning_rate = 0.05;
  plain.momentum = 0.0;
  plain.weight_decay = 0.0;
  auto params = n.parameters();
  sgd_step(params, plain);
  for (std::size_t k = 0; k < before.size(); ++k)
    CHECK(n.bank1().value[k] == before[k] - 0.05 * grad[k]);
}

TEST_CASE("morphological layer stacks neuron outputs") {
  Rng rng(10);
  const Shape in{2, 9, 9};
  const Tensor x = test::random_tensor(rng, in);
  std::vector<NeuronSpec> specs;
  for (auto k : kAllKinds) specs.push_back(NeuronSpec::same_size(k, 3));
  MorphLayer layer(in, specs, "l0");
  layer.initialize(rng);
  CHECK(layer.output_shape() == Shape{8, 9, 9});
  const Tensor y = layer.forward(x);
  for (std::size_t k = 0; k < specs.size(); ++k)
    CHECK(y.channel(k) == layer.neurons()[k].forward(x));

  MorphLayer single(in, {NeuronSpec::same_size(NeuronKind::opening, 3)}, "l1");
  CHECK(single.output_shape() == Shape{1, 9, 9});
  CHECK(layer.neurons()[3].bank1().name == "l0.n3.bank1");
}
