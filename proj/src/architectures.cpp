#include "dmn/architectures.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmn {

const std::vector<std::string>& architecture_names() {
  static const std::vector<std::string> names{"synnet",   "morph-lenet", "morph-alexnet",
                                              "cls-layer", "conv-synnet", "conv-lenet"};
  return names;
}

bool is_architecture(const std::string& name) {
  const auto& n = architecture_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

namespace {

using K = NeuronKind;

Shape input_of(const BuildOptions& o) {
  if (o.in_channels == 0 || o.input_size == 0) {
    throw ShapeError("input channels and size must be positive");
  }
  return Shape{o.in_channels, o.input_size, o.input_size};
}

std::string next_name(const Network& net) { return "l" + std::to_string(net.size()); }

struct StageGeometry {
  std::size_t side;
  std::size_t stride1;
  std::size_t padding1;
  std::size_t stride2;
  std::size_t padding2;
};

void add_morph(Network& net, const BuildOptions& o, const StageGeometry& g,
               const std::vector<std::pair<NeuronKind, std::size_t>>& mix) {
  std::vector<NeuronSpec> specs;
  for (const auto& [kind, count] : mix) {
    for (std::size_t k = 0; k < count; ++k) {
      specs.push_back(NeuronSpec{kind, g.side, g.stride1, g.padding1, g.stride2, g.padding2,
                                 o.reconstruction_dilate_se});
    }
  }
  net.add(std::make_unique<MorphLayer>(net.output_shape(), specs, next_name(net)));
}

void add_fc(Network& net, std::size_t out) {
  const std::size_t in = net.output_shape().size();
  net.add(std::make_unique<FullyConnected>(in, out, next_name(net)));
}

void add_relu(Network& net) { net.add(std::make_unique<ReLU>(net.output_shape())); }

void add_flatten(Network& net) { net.add(std::make_unique<Flatten>(net.output_shape())); }

void add_conv(Network& net, std::size_t out, std::size_t kernel, std::size_t stride,
              std::size_t padding) {
  net.add(std::make_unique<Conv2d>(net.output_shape(), out, kernel, stride, padding,
                                   next_name(net)));
}

void add_pool(Network& net) { net.add(std::make_unique<MaxPool2d>(net.output_shape(), 2, 2)); }

}  // namespace

Network build_synnet(const BuildOptions& o) {
  Network net("synnet", input_of(o), o.classes);
  add_morph(net, o, {11, 1, 5, 1, 5}, {{K::opening, 1}});
  add_flatten(net);
  add_fc(net, o.classes);
  return net;
}

Network build_morph_lenet(const BuildOptions& o) {
  Network net("morph-lenet", input_of(o), o.classes);
  add_morph(net, o, {5, 2, 2, 2, 2},
            {{K::composed_dilation_first, 3}, {K::composed_erosion_first, 3}});
  add_morph(net, o, {5, 1, 2, 1, 2},
            {{K::composed_dilation_first, 3},
             {K::composed_erosion_first, 3},
             {K::rec_by_erosion, 3},
             {K::rec_by_dilation, 2},
             {K::white_tophat, 2},
             {K::black_tophat, 3}});
  add_flatten(net);
  add_fc(net, 120);
  add_relu(net);
  add_fc(net, 84);
  add_relu(net);
  add_fc(net, o.classes);
  return net;
}

Network build_morph_alexnet(const BuildOptions& o) {
  Network net("morph-alexnet", input_of(o), o.classes);
  add_morph(net, o, {11, 1, 5, 5, 2},
            {{K::composed_dilation_first, 4}, {K::composed_erosion_first, 4}});
  add_morph(net, o, {5, 1, 2, 1, 2},
            {{K::composed_dilation_first, 4},
             {K::composed_erosion_first, 4},
             {K::rec_by_erosion, 4},
             {K::rec_by_dilation, 4},
             {K::white_tophat, 4},
             {K::black_tophat, 4}});
  add_morph(net, o, {3, 1, 1, 3, 0},
            {{K::composed_dilation_first, 24}, {K::composed_erosion_first, 24}});
  add_morph(net, o, {3, 1, 1, 1, 1},
            {{K::composed_dilation_first, 6},
             {K::composed_erosion_first, 6},
             {K::rec_by_erosion, 5},
             {K::rec_by_dilation, 5},
             {K::white_tophat, 5},
             {K::black_tophat, 5}});
  add_morph(net, o, {3, 1, 1, 2, 0},
            {{K::composed_dilation_first, 16}, {K::composed_erosion_first, 16}});
  add_flatten(net);
  add_fc(net, 512);
  add_relu(net);
  add_fc(net, 512);
  add_relu(net);
  add_fc(net, o.classes);
  return net;
}

Network build_classification_layer_baseline(const BuildOptions& o) {
  Network net("cls-layer", input_of(o), o.classes);
  add_flatten(net);
  add_fc(net, o.classes);
  return net;
}

Network build_conv_baseline(const std::string& variant, const BuildOptions& o) {
  if (variant == "synnet") {
    // one 11x11 filter per morphological stage, max-pool between the convolutions
    Network net("conv-synnet", input_of(o), o.classes);
    add_conv(net, 1, 11, 1, 5);
    add_relu(net);
    add_pool(net);
    add_conv(net, 1, 11, 1, 5);
    add_relu(net);
    add_flatten(net);
    add_fc(net, o.classes);
    return net;
  }
  if (variant == "lenet") {
    // 6 and 16 filters of 5x5 as in the morphological layers; the first
    // convolution keeps stride 2, the max-pool replaces the second stride-2 stage
    Network net("conv-lenet", input_of(o), o.classes);
    add_conv(net, 6, 5, 2, 2);
    add_relu(net);
    add_pool(net);
    add_conv(net, 16, 5, 1, 2);
    add_relu(net);
    add_flatten(net);
    add_fc(net, 120);
    add_relu(net);
    add_fc(net, 84);
    add_relu(net);
    add_fc(net, o.classes);
    return net;
  }
  throw std::invalid_argument("unknown conv baseline variant '" + variant +
                              "' (expected synnet or lenet)");
}

Network build_network(const std::string& name, const BuildOptions& options) {
  if (name == "synnet") return build_synnet(options);
  if (name == "morph-lenet") return build_morph_lenet(options);
  if (name == "morph-alexnet") return build_morph_alexnet(options);
  if (name == "cls-layer") return build_classification_layer_baseline(options);
  if (name == "conv-synnet") return build_conv_baseline("synnet", options);
  if (name == "conv-lenet") return build_conv_baseline("lenet", options);
  std::string known;
  for (const auto& n : architecture_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown architecture '" + name + "' (known: " + known + ")");
}

std::vector<ShapeAuditEntry> shape_audit(Network& net) {
  Rng rng(0x5eed);
  Tensor x(net.input_shape());
  for (double& v : x.data()) v = rng.uniform();
  std::vector<ShapeAuditEntry> out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    x = l.forward(x);
    out.push_back({i, l.kind(), l.output_shape(), x.shape()});
  }
  return out;
}

std::vector<std::vector<NeuronKind>> morph_layer_kinds(const Network& net) {
  std::vector<std::vector<NeuronKind>> out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto* m = dynamic_cast<const MorphLayer*>(&net.layer(i));
    if (!m) continue;
    std::vector<NeuronKind> kinds;
    for (const auto& n : m->neurons()) kinds.push_back(n.spec().kind);
    out.push_back(std::move(kinds));
  }
  return out;
}

}  // namespace dmn
