#pragma once

#include <string>
#include <vector>

#include "dmn/nn.hpp"

namespace dmn {

struct BuildOptions {
  std::size_t classes = 2;
  std::size_t in_channels = 1;
  /// Square input side; the published networks use 224.
  std::size_t input_size = 224;
  bool reconstruction_dilate_se = true;
};

/// Names accepted by build_network and the CLI.
const std::vector<std::string>& architecture_names();
bool is_architecture(const std::string& name);

/// Layers are named l0, l1, ... in order; parameter names extend them
/// (for example l0.n3.bank1 or l4.weight).
Network build_synnet(const BuildOptions& options);
Network build_morph_lenet(const BuildOptions& options);
Network build_morph_alexnet(const BuildOptions& options);
Network build_classification_layer_baseline(const BuildOptions& options);
/// variant is "synnet" or "lenet".
Network build_conv_baseline(const std::string& variant, const BuildOptions& options);
Network build_network(const std::string& name, const BuildOptions& options);

struct ShapeAuditEntry {
  std::size_t layer = 0;
  std::string kind;
  Shape declared;
  Shape computed;
};

/// Pushes a probe tensor through the network, recording declared and actual
/// output shapes per layer.
std::vector<ShapeAuditEntry> shape_audit(Network& net);

/// Neuron kinds of every morphological layer, in layer order.
std::vector<std::vector<NeuronKind>> morph_layer_kinds(const Network& net);

}  // namespace dmn
