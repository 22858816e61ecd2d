#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dmn {

enum class ParamRole {
  weight,
  bias,
  /// Real-valued depthwise bank that is max-binarized in the forward pass.
  /// Trained through the straight-through rule, so finite differences do not
  /// apply to it.
  morph_bank,
};

/// Trainable array with its gradient and momentum buffer (always the same size).
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> dims, ParamRole role);

  std::string name;
  std::vector<std::size_t> dims;
  ParamRole role = ParamRole::weight;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> velocity;

  std::size_t size() const { return value.size(); }
  void zero_grad();
  bool finite_difference_checkable() const { return role != ParamRole::morph_bank; }
};

}  // namespace dmn
