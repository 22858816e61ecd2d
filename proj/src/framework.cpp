#include "dmn/framework.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace dmn {

std::size_t max_binarize_index(std::span<const double> filter) {
  if (filter.empty()) throw std::invalid_argument("max_binarize: empty filter");
  std::size_t best = 0;
  for (std::size_t k = 1; k < filter.size(); ++k) {
    if (filter[k] > filter[best]) best = k;
  }
  return best;
}

Tensor max_binarize(const Tensor& filter) {
  Tensor out(filter.shape());
  out.data()[max_binarize_index(filter.data())] = 1.0;
  return out;
}

BinaryBank::BinaryBank(std::size_t side, std::vector<std::uint32_t> active)
    : side_(side), active_(std::move(active)) {
  if (side_ == 0) throw std::invalid_argument("binary bank side must be >= 1");
  if (active_.empty()) throw std::invalid_argument("binary bank needs at least one filter");
  for (auto a : active_) {
    if (a >= side_ * side_) throw std::invalid_argument("binary bank cell out of range");
  }
}

Tensor BinaryBank::as_tensor() const {
  Tensor t(filters(), side_, side_);
  for (std::size_t f = 0; f < filters(); ++f) t.at(f, active_row(f), active_col(f)) = 1.0;
  return t;
}

BinaryBank binarize_bank(std::span<const double> weights, std::size_t side) {
  const std::size_t cells = side * side;
  if (weights.size() % cells != 0 || weights.empty()) {
    throw ShapeError("binarize_bank: " + std::to_string(weights.size()) +
                     " weights do not form filters of side " + std::to_string(side));
  }
  std::vector<std::uint32_t> active(weights.size() / cells);
  for (std::size_t f = 0; f < active.size(); ++f) {
    active[f] = static_cast<std::uint32_t>(max_binarize_index(weights.subspan(f * cells, cells)));
  }
  return BinaryBank(side, std::move(active));
}

classical::StructuringElement recover_se(const BinaryBank& bank) {
  std::vector<std::uint8_t> mask(bank.side() * bank.side(), 0);
  for (auto a : bank.active()) mask[a] = 1;
  return classical::StructuringElement(bank.side(), bank.side(), std::move(mask));
}

BinaryBank bank_from_se(const classical::StructuringElement& se) {
  if (se.rows() != se.cols() || se.center_row() != se.rows() / 2 ||
      se.center_col() != se.cols() / 2) {
    throw std::invalid_argument("bank_from_se: structuring element must be square and centered");
  }
  std::vector<std::uint32_t> active;
  for (std::size_t k = 0; k < se.mask().size(); ++k) {
    if (se.mask()[k]) active.push_back(static_cast<std::uint32_t>(k));
  }
  return BinaryBank(se.rows(), std::move(active));
}

classical::StructuringElement dilate_se_for_reconstruction(
    const classical::StructuringElement& se) {
  const std::size_t rows = se.rows() + 2;
  const std::size_t cols = se.cols() + 2;
  Tensor canvas(1, rows, cols);
  for (std::size_t r = 0; r < se.rows(); ++r)
    for (std::size_t c = 0; c < se.cols(); ++c)
      if (se.active(r, c)) canvas.at(0, r + 1, c + 1) = 1.0;
  const Tensor grown = classical::dilate(canvas, classical::make_se(classical::SeShape::square, 3));
  std::vector<std::uint8_t> mask(rows * cols);
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = grown.data()[k] > 0.0 ? 1 : 0;
  return classical::StructuringElement(rows, cols, std::move(mask), se.center_row() + 1,
                                       se.center_col() + 1);
}

namespace {

struct Probe {
  std::size_t row;
  std::size_t col;
  std::uint32_t filter;
};

// Distinct active cells, each represented by its lowest filter index, in
// increasing filter order. Filters sharing a cell produce identical planes,
// so only the lowest of them can ever win the pooling.
std::vector<Probe> distinct_probes(const BinaryBank& bank) {
  std::vector<Probe> probes;
  std::vector<bool> seen(bank.side() * bank.side(), false);
  for (std::size_t f = 0; f < bank.filters(); ++f) {
    const auto cell = bank.active_cell(f);
    if (seen[cell]) continue;
    seen[cell] = true;
    probes.push_back({bank.active_row(f), bank.active_col(f), static_cast<std::uint32_t>(f)});
  }
  return probes;
}

// Output columns [lo, hi) of probe column offset `shift` read inside the
// image; the others read zero padding.
void valid_columns(std::ptrdiff_t shift, std::size_t stride, std::size_t w, std::size_t ow,
                   std::size_t& lo, std::size_t& hi) {
  const auto st = static_cast<std::ptrdiff_t>(stride);
  const auto first = shift >= 0 ? 0 : (-shift + st - 1) / st;
  const auto last = (static_cast<std::ptrdiff_t>(w) - shift + st - 1) / st;
  lo = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::ptrdiff_t>(first, 0)), ow);
  hi = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::ptrdiff_t>(last, 0)), ow);
  hi = std::max(hi, lo);
}

template <bool Erosion>
inline void pool_value(double v, double& best, std::uint32_t& win, std::uint32_t f) {
  const bool better = Erosion ? v < best : v > best;
  best = better ? v : best;
  win = better ? f : win;
}

template <bool Erosion>
void pool_probe_row(const double* plane, std::size_t h, std::size_t w, std::size_t ow,
                    std::size_t stride, std::size_t padding, std::size_t i, const Probe& p,
                    double* best, std::uint32_t* win) {
  const std::uint32_t f = p.filter;
  const auto y = static_cast<std::ptrdiff_t>(i * stride + p.row) - static_cast<std::ptrdiff_t>(padding);
  if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) {
    for (std::size_t j = 0; j < ow; ++j) pool_value<Erosion>(0.0, best[j], win[j], f);
    return;
  }
  const double* src = plane + static_cast<std::size_t>(y) * w;
  const auto shift = static_cast<std::ptrdiff_t>(p.col) - static_cast<std::ptrdiff_t>(padding);
  std::size_t lo, hi;
  valid_columns(shift, stride, w, ow, lo, hi);
  for (std::size_t j = 0; j < lo; ++j) pool_value<Erosion>(0.0, best[j], win[j], f);
  if (stride == 1) {
    const double* s = src + shift;
    for (std::size_t j = lo; j < hi; ++j) pool_value<Erosion>(s[j], best[j], win[j], f);
  } else {
    for (std::size_t j = lo; j < hi; ++j) {
      pool_value<Erosion>(src[static_cast<std::ptrdiff_t>(j * stride) + shift], best[j], win[j], f);
    }
  }
  for (std::size_t j = hi; j < ow; ++j) pool_value<Erosion>(0.0, best[j], win[j], f);
}

template <bool Erosion>
void pool_all(const Tensor& input, const std::vector<Probe>& probes, std::size_t stride,
              std::size_t padding, MorphResult& r) {
  const std::size_t c = input.channels();
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = r.output.height();
  const std::size_t ow = r.output.width();
  for (std::size_t l = 0; l < c; ++l) {
    const double* plane = input.plane(l).data();
    for (std::size_t i = 0; i < oh; ++i) {
      double* best = &r.output.at(l, i, 0);
      std::uint32_t* win = &r.trace.winner[(l * oh + i) * ow];
      std::fill(best, best + ow, Erosion ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity());
      for (const auto& p : probes) pool_probe_row<Erosion>(plane, h, w, ow, stride, padding, i, p, best, win);
    }
  }
}

}  // namespace

MorphResult framework_morph(MorphDirection direction, const BinaryBank& bank, std::size_t stride,
                            std::size_t padding, const Tensor& input) {
  const std::size_t s = bank.side();
  const std::size_t c = input.channels();
  const std::size_t oh = conv_output_dim(input.height(), s, stride, padding);
  const std::size_t ow = conv_output_dim(input.width(), s, stride, padding);
  const auto probes = distinct_probes(bank);

  MorphResult r{Tensor(c, oh, ow), PoolTrace{Shape{c, oh, ow}, {}}};
  r.trace.winner.assign(c * oh * ow, probes.front().filter);
  if (direction == MorphDirection::erosion) {
    pool_all<true>(input, probes, stride, padding, r);
  } else {
    pool_all<false>(input, probes, stride, padding, r);
  }
  return r;
}

MorphGrads framework_morph_backward(const BinaryBank& bank, std::size_t stride,
                                    std::size_t padding, const Tensor& input,
                                    const PoolTrace& trace, const Tensor& grad_out) {
  const std::size_t s = bank.side();
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  if (grad_out.shape() != trace.shape) {
    throw ShapeError("framework_morph_backward: gradient " + grad_out.shape().str() +
                     " vs trace " + trace.shape.str());
  }
  const std::size_t oh = trace.shape.height;
  const std::size_t ow = trace.shape.width;
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const auto ss = static_cast<std::ptrdiff_t>(s);

  MorphGrads g{Tensor(input.shape()), std::vector<double>(bank.filters() * s * s, 0.0)};
  for (std::size_t l = 0; l < input.channels(); ++l) {
    for (std::size_t i = 0; i < oh; ++i) {
      const auto y0 = static_cast<std::ptrdiff_t>(i * stride) - pad;
      for (std::size_t j = 0; j < ow; ++j) {
        const double go = grad_out.at(l, i, j);
        if (go == 0.0) continue;
        const std::uint32_t f = trace.at(l, i, j);
        const auto x0 = static_cast<std::ptrdiff_t>(j * stride) - pad;
        const auto ay = y0 + static_cast<std::ptrdiff_t>(bank.active_row(f));
        const auto ax = x0 + static_cast<std::ptrdiff_t>(bank.active_col(f));
        if (ay >= 0 && ay < static_cast<std::ptrdiff_t>(h) && ax >= 0 &&
            ax < static_cast<std::ptrdiff_t>(w)) {
          g.input.at(l, static_cast<std::size_t>(ay), static_cast<std::size_t>(ax)) += go;
        }
        double* gf = g.bank.data() + f * s * s;
        const double* plane = input.plane(l).data();
        const bool inside = y0 >= 0 && x0 >= 0 && y0 + ss <= static_cast<std::ptrdiff_t>(h) &&
                            x0 + ss <= static_cast<std::ptrdiff_t>(w);
        if (inside) {
          const double* src = plane + static_cast<std::size_t>(y0) * w + static_cast<std::size_t>(x0);
          for (std::size_t m = 0; m < s; ++m, src += w, gf += s) {
            for (std::size_t n = 0; n < s; ++n) gf[n] += go * src[n];
          }
          continue;
        }
        for (std::size_t m = 0; m < s; ++m) {
          const auto y = y0 + static_cast<std::ptrdiff_t>(m);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* src = plane + static_cast<std::size_t>(y) * w;
          for (std::size_t n = 0; n < s; ++n) {
            const auto x = x0 + static_cast<std::ptrdiff_t>(n);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
            gf[m * s + n] += go * src[x];
          }
        }
      }
    }
  }
  return g;
}

}  // namespace dmn
