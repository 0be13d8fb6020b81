#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "pfpinn/autodiff.hpp"

using namespace pfpinn;
using ad::Var;

namespace {

template <class S>
S expr(const S& x, const S& y) {
  using std::exp;
  using std::tanh;
  using ad::exp;
  using ad::tanh;
  return tanh(x * y) + exp(x) / (y * y + 1.0) - 3.0 * x;
}

double fd(const std::function<double(double, double)>& f, double x, double y, int k) {
  const double h = 1e-6;
  return k == 0 ? (f(x + h, y) - f(x - h, y)) / (2 * h) : (f(x, y + h) - f(x, y - h)) / (2 * h);
}

}  // namespace

TEST_CASE("traced values are bitwise equal to plain double evaluation") {
  const std::vector<double> theta{0.37, -1.21};
  const auto vg = ad::grad_params([](auto v) { return expr<Var>(v[0], v[1]); }, theta);
  CHECK(vg.value == expr<double>(0.37, -1.21));
}

TEST_CASE("reverse sweep matches central differences") {
  const std::vector<double> theta{0.37, -1.21};
  const auto vg = ad::grad_params([](auto v) { return expr<Var>(v[0], v[1]); }, theta);
  for (int k = 0; k < 2; ++k)
    CHECK(vg.gradient[k] == doctest::Approx(fd(expr<double>, 0.37, -1.21, k)).epsilon(1e-7));
}

TEST_CASE("a variable used twice accumulates both adjoints") {
  const std::vector<double> theta{1.5};
  const auto vg = ad::grad_params([](auto v) { return v[0] * v[0] * v[0]; }, theta);
  CHECK(vg.gradient[0] == doctest::Approx(3.0 * 1.5 * 1.5));
}

TEST_CASE("output independent of the parameters has zero gradient") {
  const std::vector<double> theta{1.0, 2.0};
  const auto vg = ad::grad_params([](auto) { return Var(4.0); }, theta);
  CHECK(vg.value == 4.0);
  CHECK(vg.gradient == std::vector<double>{0.0, 0.0});
}

TEST_CASE("custom node forwards its partials") {
  const std::vector<double> theta{2.0, 3.0};
  const auto vg = ad::grad_params(
      [](auto v) {
        const std::vector<Var> in{v[0], v[1]};
        const std::vector<double> partials{10.0, -1.0};
        return 2.0 * ad::custom(7.0, in, partials, "lin");
      },
      theta);
  CHECK(vg.value == 14.0);
  CHECK(vg.gradient[0] == 20.0);
  CHECK(vg.gradient[1] == -2.0);
}

TEST_CASE("max breaks ties toward the first argument") {
  const std::vector<double> theta{1.0, 1.0};
  const auto vg = ad::grad_params([](auto v) { return ad::max(v[0], v[1]); }, theta);
  CHECK(vg.gradient[0] == 1.0);
  CHECK(vg.gradient[1] == 0.0);
}

TEST_CASE("non-finite results raise") {
  const std::vector<double> neg{-1.0}, zero{0.0};
  CHECK_THROWS_AS(ad::grad_params([](auto v) { return ad::log(v[0]); }, neg), ad::NonFiniteError);
  CHECK_THROWS_AS(ad::grad_params([](auto v) { return ad::sqrt(v[0]); }, zero), ad::NonFiniteError);
  CHECK_THROWS_AS(ad::grad_params([](auto v) { return v[0] / 0.0; }, neg), ad::NonFiniteError);
}

TEST_CASE("input Jacobian of a linear map is the matrix") {
  ad::FieldMap f{2, 3, [](std::span<const Var> x) {
                   return std::vector<Var>{2.0 * x[0] - x[1], 0.5 * x[1], x[0] + 4.0 * x[1]};
                 }};
  const std::vector<double> x{0.3, -0.8};
  const Eigen::MatrixXd J = ad::input_jacobian(f, x);
  Eigen::MatrixXd expect(3, 2);
  expect << 2, -1, 0, 0.5, 1, 4;
  CHECK((J - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input Jacobian rejects a wrong point dimension") {
  ad::FieldMap f{2, 1, [](std::span<const Var> x) { return std::vector<Var>{x[0]}; }};
  const std::vector<double> x{0.3};
  CHECK_THROWS_AS(ad::input_jacobian(f, x), std::invalid_argument);
}
