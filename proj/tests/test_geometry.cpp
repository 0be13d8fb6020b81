#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "pfpinn/geometry.hpp"

using namespace pfpinn;
using namespace pfpinn::geometry;

TEST_CASE("B-spline basis is a partition of unity") {
  const KnotVector kv(2, {0, 0, 0, 0.25, 0.5, 0.5, 1, 1, 1});
  for (double xi : {0.0, 0.1, 0.25, 0.49, 0.5, 0.77, 1.0}) {
    double s = 0.0;
    for (int i = 0; i < kv.num_basis(); ++i) s += bspline_basis(kv, i, xi);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    const auto b = eval_basis(kv, xi);
    double sv = 0.0, sd = 0.0;
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      sv += b.values[k];
      sd += b.derivatives[k];
    }
    CHECK(sv == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(sd) < 1e-12);
  }
}

TEST_CASE("basis derivatives match central differences") {
  const KnotVector kv = KnotVector::uniform(3, 4);
  const double xi = 0.41, h = 1e-6;
  const auto b = eval_basis(kv, xi);
  for (std::size_t k = 0; k < b.values.size(); ++k) {
    const int i = b.span - kv.degree() + static_cast<int>(k);
    const double fd = (bspline_basis(kv, i, xi + h) - bspline_basis(kv, i, xi - h)) / (2 * h);
    CHECK(b.derivatives[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("malformed knot vectors are rejected") {
  CHECK_THROWS_AS(KnotVector(1, {0, 0.5, 1, 1}), InputError);
  CHECK_THROWS_AS(KnotVector(1, {0, 0, 0.7, 0.3, 1, 1}), InputError);
}

TEST_CASE("quarter disc maps the arc onto the circle") {
  const NurbsPatch p = quarter_disc_patch(2.0);
  for (double xi : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    const auto m = patch_map_unchecked(p, {xi, 1.0, 0.0});
    CHECK(std::hypot(m.x[0], m.x[1]) == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("patch Jacobian matches central differences") {
  const NurbsPatch p = hole_sector_patch({8.0, 2.75, 0.0}, 0.25, 0.5, 1);
  const Point xi{0.3, 0.6, 0.0};
  const auto m = patch_map(p, xi);
  const double h = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Point a = xi, b = xi;
    a[k] += h;
    b[k] -= h;
    const auto pa = patch_map(p, a), pb = patch_map(p, b);
    for (int i = 0; i < 2; ++i)
      CHECK(m.jacobian(i, k) == doctest::Approx((pa.x[i] - pb.x[i]) / (2 * h)).epsilon(1e-7));
  }
  CHECK(m.det > 0.0);
}

TEST_CASE("box patch is the affine map") {
  const NurbsPatch p = box_patch(2, {1.0, -2.0, 0.0}, {3.0, 2.0, 0.0}, {2, 5, 1});
  const auto m = patch_map(p, {0.25, 0.5, 0.0});
  CHECK(m.x[0] == doctest::Approx(1.5));
  CHECK(m.x[1] == doctest::Approx(0.0));
  CHECK(m.det == doctest::Approx(8.0));
}

TEST_CASE("refinement keeps the tiling and multiplies marked cells") {
  const NurbsPatch p = box_patch(2, {0, 0, 0}, {1, 1, 0}, {4, 4, 1});
  const ElementMesh base = ElementMesh::from_knot_spans(0, p);
  CHECK(base.size() == 16);
  const ElementMesh r = refine_region(base, [](const Cell& c) { return c.center()[0] < 0.5; }, 2);
  // 8 unmarked cells stay; the 8 marked cells become 4 each, then those on the left half again.
  CHECK(r.size() == 8 + 8 * 16);
  CHECK(check_tiling(r).empty());
}

TEST_CASE("crack distances") {
  const CrackSegment s{{0.0, 0.5, 0.0}, {0.5, 0.5, 0.0}};
  CHECK(crack_distance({0.25, 0.7, 0.0}, s) == doctest::Approx(0.2));
  CHECK(crack_distance({0.8, 0.9, 0.0}, s) == doctest::Approx(0.5));
  const CrackPlane pl{{0.0, 0.0, 0.5}, {0.5, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  CHECK(crack_distance({0.2, 0.3, 0.6}, pl) == doctest::Approx(0.1));
  CHECK(crack_distance({0.8, 0.3, 0.9}, pl) == doctest::Approx(0.5));
}
