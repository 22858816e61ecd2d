#pragma once

#include <cstddef>
#include <vector>

#include "dmn/tensor.hpp"

namespace dmn {

struct Sample {
  Tensor image;
  std::size_t label = 0;
  std::size_t id = 0;
};

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

}  // namespace dmn
