#include <cmath>
#include <vector>

#include "doctest.h"
#include "dmn/morphology.hpp"
#include "support.hpp"

using namespace dmn;
using namespace dmn::classical;

namespace {

// Per-pixel neighborhood scan written independently of the library helper.
Tensor brute(const Tensor& x, const StructuringElement& se, bool dilation) {
  Tensor out(x.shape());
  const long h = static_cast<long>(x.height()), w = static_cast<long>(x.width());
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) {
        double best = x.at(c, i, j);
        for (std::size_t r = 0; r < se.rows(); ++r)
          for (std::size_t q = 0; q < se.cols(); ++q) {
            if (!se.active(r, q)) continue;
            const long y = i + static_cast<long>(r) - static_cast<long>(se.center_row());
            const long z = j + static_cast<long>(q) - static_cast<long>(se.center_col());
            if (y < 0 || z < 0 || y >= h || z >= w) continue;
            const double v = x.at(c, y, z);
            best = dilation ? std::max(best, v) : std::min(best, v);
          }
        out.at(c, i, j) = best;
      }
  return out;
}

Tensor square_image(std::size_t size, std::size_t top, std::size_t left, std::size_t side) {
  Tensor t(1, size, size);
  for (std::size_t i = top; i < top + side; ++i)
    for (std::size_t j = left; j < left + side; ++j) t.at(0, i, j) = 1.0;
  return t;
}

bool leq(const Tensor& a, const Tensor& b) {
  for (std::size_t p = 0; p < a.size(); ++p)
    if (a.data()[p] > b.data()[p]) return false;
  return true;
}

}  // namespace

TEST_CASE("structuring element factories") {
  CHECK(make_se(SeShape::square, 3).count() == 9);
  CHECK(make_se(SeShape::cross, 3).count() == 5);
  CHECK(make_se(SeShape::diamond, 5).count() == 13);
  CHECK(make_se(SeShape::x_shape, 5).count() == 9);
  const auto disk = make_se(SeShape::disk, 5);
  CHECK(disk.active(2, 2));
  CHECK(disk.reflected() == disk);
  CHECK_THROWS_AS(make_se(SeShape::square, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_se(SeShape::square, 0), std::invalid_argument);
  CHECK(make_rectangle(3, 7).count() == 21);
  CHECK(parse_se_shape("diamond") == SeShape::diamond);
}

TEST_CASE("structuring element ascii round trip") {
  const auto se = make_se(SeShape::diamond, 5);
  CHECK(parse_se_ascii(se.to_ascii()) == se);
  CHECK(parse_se_ascii("010\n111\n010\n") == make_se(SeShape::cross, 3));
  CHECK_THROWS_AS(parse_se_ascii("01\n111\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_se_ascii("000\n000\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_se_ascii("0x1\n"), std::invalid_argument);
}

TEST_CASE("erosion and dilation examples") {
  Tensor spot(1, 5, 5);
  spot.at(0, 2, 2) = 1.0;
  const auto sq3 = make_se(SeShape::square, 3);
  CHECK(erode(spot, sq3).sum() == 0.0);
  const Tensor grown = dilate(spot, sq3);
  CHECK(grown.sum() == 9.0);
  CHECK(grown == square_image(5, 1, 1, 3));
  Rng rng(2);
  const Tensor x = test::random_tensor(rng, Shape{2, 7, 7});
  const auto one = make_se(SeShape::square, 1);
  CHECK(erode(x, one) == x);
  CHECK(dilate(x, one) == x);
}

TEST_CASE("erosion and dilation match the brute-force scan") {
  Rng rng(7);
  for (auto shape : {SeShape::cross, SeShape::diamond, SeShape::disk, SeShape::x_shape}) {
    for (std::size_t size : {3u, 5u}) {
      const Tensor x = test::random_tensor(rng, Shape{1, 9, 8});
      const auto se = make_se(shape, size);
      CHECK(erode(x, se) == brute(x, se, false));
      CHECK(dilate(x, se) == brute(x, se, true));
    }
  }
}

TEST_CASE("opening and closing examples") {
  const auto sq3 = make_se(SeShape::square, 3);
  CHECK(opening(Tensor(1, 6, 6, 0.4), sq3) == Tensor(1, 6, 6, 0.4));
  const Tensor five = square_image(15, 5, 5, 5);
  CHECK(opening(five, make_se(SeShape::square, 7)).sum() == 0.0);
  CHECK(opening(five, sq3) == five);
  Tensor pit(1, 7, 7, 1.0);
  pit.at(0, 3, 3) = 0.0;
  const Tensor bt = black_tophat(pit, sq3);
  CHECK(bt.at(0, 3, 3) == 1.0);
  CHECK(bt.sum() == 1.0);
  Tensor peak(1, 7, 7);
  peak.at(0, 3, 3) = 1.0;
  CHECK(white_tophat(peak, sq3) == peak);
}

TEST_CASE("ordering, idempotence and duality on random images") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = test::random_tensor(rng, Shape{1, 10, 9});
    const auto se = make_se(trial % 2 ? SeShape::square : SeShape::diamond, trial % 3 ? 3 : 5);
    CHECK(leq(erode(x, se), x));
    CHECK(leq(x, dilate(x, se)));
    const Tensor o = opening(x, se);
    const Tensor c = closing(x, se);
    CHECK(leq(o, x));
    CHECK(leq(x, c));
    CHECK(opening(o, se) == o);
    CHECK(closing(c, se) == c);
    CHECK(white_tophat(x, se).min() >= 0.0);
    CHECK(black_tophat(x, se).min() >= 0.0);
    // negation swaps erosion and dilation for a symmetric SE
    const Tensor neg = scaled(x, -1.0);
    CHECK(erode(neg, se) == scaled(dilate(x, se), -1.0));
  }
}

TEST_CASE("geodesic reconstruction") {
  const auto sq3 = make_se(SeShape::square, 3);
  CHECK(reconstruct(ReconstructionKind::by_erosion, Tensor(1, 6, 6, 0.3), sq3) ==
        Tensor(1, 6, 6, 0.3));

  // by_dilation restores the large square whole and removes the small one
  Tensor scene = square_image(20, 2, 2, 7);
  for (std::size_t i = 14; i < 16; ++i)
    for (std::size_t j = 14; j < 16; ++j) scene.at(0, i, j) = 1.0;
  const Tensor rec = reconstruct(ReconstructionKind::by_dilation, scene, make_se(SeShape::square, 5));
  CHECK(rec == square_image(20, 2, 2, 7));

  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = test::random_tensor(rng, Shape{1, 9, 9});
    for (auto kind : {ReconstructionKind::by_erosion, ReconstructionKind::by_dilation}) {
      const Tensor r = reconstruct(kind, x, sq3);
      const auto cross = make_se(SeShape::cross, 3);
      const Tensor step = kind == ReconstructionKind::by_erosion
                              ? elementwise(ElementwiseOp::max, erode(r, cross), x)
                              : elementwise(ElementwiseOp::min, dilate(r, cross), x);
      CHECK(step == r);
    }
  }
}

TEST_CASE("single-step reconstruction") {
  const auto sq3 = make_se(SeShape::square, 3);
  const auto sq5 = make_se(SeShape::square, 5);
  CHECK(reconstruct_approx(ReconstructionKind::by_erosion, Tensor(1, 5, 5, 0.7), sq3, sq5) ==
        Tensor(1, 5, 5, 0.7));
  Rng rng(19);
  const Tensor x = test::random_tensor(rng, Shape{1, 8, 8});
  const auto one = make_se(SeShape::square, 1);
  CHECK(reconstruct_approx(ReconstructionKind::by_dilation, x, one, one) == x);
  const Tensor b = test::random_binary(rng, Shape{1, 12, 12});
  CHECK(reconstruct_approx(ReconstructionKind::by_erosion, b, sq3, sq5) ==
        elementwise(ElementwiseOp::max, erode(dilate(b, sq3), sq5), b));
  CHECK(reconstruct_approx(ReconstructionKind::by_dilation, b, sq3, sq5) ==
        elementwise(ElementwiseOp::min, dilate(erode(b, sq3), sq5), b));
}

TEST_CASE("center policy only matters when the center is inactive") {
  Rng rng(23);
  const Tensor x = test::random_tensor(rng, Shape{1, 8, 8});
  const auto sq3 = make_se(SeShape::square, 3);
  CHECK(erode(x, sq3, CenterPolicy::mask_only) == erode(x, sq3));
  const auto ring = parse_se_ascii("111\n101\n111\n");
  CHECK(erode(x, ring) == erode(x, sq3));
  Tensor spot(1, 5, 5);
  spot.at(0, 2, 2) = 1.0;
  CHECK(dilate(spot, ring, CenterPolicy::mask_only).at(0, 2, 2) == 0.0);
  CHECK(dilate(spot, ring).at(0, 2, 2) == 1.0);
}
