#include "dmn/parameter.hpp"

#include <algorithm>

namespace dmn {

Parameter::Parameter(std::string name_, std::vector<std::size_t> dims_, ParamRole role_)
    : name(std::move(name_)), dims(std::move(dims_)), role(role_) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  value.assign(n, 0.0);
  grad.assign(n, 0.0);
  velocity.assign(n, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

}  // namespace dmn
