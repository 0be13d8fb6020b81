#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pfpinn/problem.hpp"
#include "pfpinn/quadrature.hpp"

using namespace pfpinn;

TEST_CASE("Gauss-Legendre nodes are symmetric and weights sum to 2") {
  for (int n : {1, 2, 5, 8, 16}) {
    const auto r = quadrature::gauss_legendre_1d(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      s += r.weights[i];
      CHECK(r.nodes[i] == doctest::Approx(-r.nodes[n - 1 - i]).epsilon(1e-15));
    }
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("two-point rule has nodes at +-1/sqrt(3)") {
  const auto r = quadrature::gauss_legendre_1d(2);
  CHECK(std::abs(std::abs(r.nodes[0]) - 1.0 / std::sqrt(3.0)) < 1e-15);
  CHECK(r.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("cloud integrates a polynomial over a box exactly") {
  const auto patch = geometry::box_patch(2, {0, 0, 0}, {2, 1, 0}, {3, 2, 1});
  const auto mesh = geometry::ElementMesh::from_knot_spans(0, patch);
  const auto cloud = quadrature::build_cloud(mesh, patch, 3);
  CHECK(cloud.size() == 6 * 9);
  std::vector<double> f(cloud.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = cloud.points[i][0] * cloud.points[i][0] * cloud.points[i][1];
  // int_0^2 x^2 dx * int_0^1 y dy = 8/3 * 1/2
  CHECK(quadrature::integrate(f, cloud) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("quarter disc area on the refined mesh") {
  const auto patch = geometry::quarter_disc_patch(1.0);
  auto mesh = geometry::ElementMesh::from_knot_spans(0, patch);
  mesh = geometry::refine_region(mesh, [](const geometry::Cell&) { return true; }, 2);
  const auto cloud = quadrature::build_cloud(mesh, patch, 4);
  const std::vector<double> ones(cloud.size(), 1.0);
  CHECK(std::abs(quadrature::integrate(ones, cloud) - std::numbers::pi / 4.0) <= 1e-6);
}

TEST_CASE("cloud order does not depend on cell enumeration") {
  const auto patch = geometry::box_patch(2, {0, 0, 0}, {1, 1, 0}, {2, 2, 1});
  auto mesh = geometry::ElementMesh::from_knot_spans(0, patch);
  auto reversed = mesh;
  std::reverse(reversed.cells.begin(), reversed.cells.end());
  const auto a = quadrature::build_cloud(mesh, patch, 2);
  const auto b = quadrature::build_cloud(reversed, patch, 2);
  CHECK(a.points == b.points);
  CHECK(a.weights == b.weights);
}

TEST_CASE("boundary cloud measures the face and points outward") {
  const auto problem = solver::make_problem("senp-tension", solver::default_material("senp-tension"), 0);
  const auto bc = quadrature::build_boundary_cloud(problem.mesh, problem.patches, {0, 1, 1}, 4);
  double len = 0.0;
  for (std::size_t i = 0; i < bc.cloud.size(); ++i) {
    len += bc.cloud.weights[i];
    CHECK(bc.cloud.points[i][1] == doctest::Approx(1.0));
    CHECK(bc.normals[i][1] == doctest::Approx(1.0));
  }
  CHECK(len == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("senp preset: 960 cells and 61440 points at 8 per direction") {
  const auto problem = solver::make_problem("senp-tension", solver::default_material("senp-tension"));
  CHECK(problem.mesh.size() == 960);
  CHECK(quadrature::build_cloud(problem.mesh, problem.patches, 8).size() == 61440);
  CHECK(quadrature::build_cloud(problem.mesh, problem.patches, 4).size() == 15360);
}

TEST_CASE("bar preset: 336 points on three sections") {
  const auto problem = solver::make_problem("bar1d", solver::default_material("bar1d"));
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, problem.default_gauss);
  CHECK(cloud.size() == 336);
  const std::vector<double> ones(cloud.size(), 1.0);
  CHECK(quadrature::integrate(ones, cloud) == doctest::Approx(2.0).epsilon(1e-14));
}
