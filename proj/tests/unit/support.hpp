#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmn/framework.hpp"
#include "dmn/parameter.hpp"
#include "dmn/rng.hpp"
#include "dmn/tensor.hpp"

namespace dmn::test {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = 0.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor random_binary(Rng& rng, Shape shape, double density = 0.5) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform() < density ? 1.0 : 0.0;
  return t;
}

/// Bank of s*s filters, each one-hot at a random cell.
inline BinaryBank random_bank(Rng& rng, std::size_t side, std::size_t filters = 0) {
  if (filters == 0) filters = side * side;
  std::vector<std::uint32_t> active(filters);
  for (auto& a : active) a = static_cast<std::uint32_t>(rng.below(side * side));
  return BinaryBank(side, std::move(active));
}

/// Real-valued bank weights whose max-binarization is `bank`.
inline void set_bank(Parameter& p, const BinaryBank& bank) {
  const std::size_t cells = bank.side() * bank.side();
  std::fill(p.value.begin(), p.value.end(), 0.0);
  for (std::size_t f = 0; f * cells < p.value.size(); ++f) {
    p.value[f * cells + bank.active_cell(f % bank.filters())] = 1.0;
  }
}

/// Largest |a - b| over pixels at least `margin` away from every border.
inline double interior_max_diff(const Tensor& a, const Tensor& b, std::size_t margin) {
  double worst = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t i = margin; i + margin < a.height(); ++i)
      for (std::size_t j = margin; j + margin < a.width(); ++j)
        worst = std::max(worst, std::abs(a.at(c, i, j) - b.at(c, i, j)));
  return worst;
}

inline bool interior_equal(const Tensor& a, const Tensor& b, std::size_t margin) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t i = margin; i + margin < a.height(); ++i)
      for (std::size_t j = margin; j + margin < a.width(); ++j)
        if (a.at(c, i, j) != b.at(c, i, j)) return false;
  return true;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dmn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dmn::test
