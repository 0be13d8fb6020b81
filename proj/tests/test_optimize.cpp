#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pfpinn/optimize.hpp"

using namespace pfpinn::optimize;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

// f = 1/2 x^T A x - b^T x with A = diag(1..n)
Objective quadratic(int n) {
  return [n](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = i + 1.0;
      g[i] = a * x[i] - 1.0;
      f += 0.5 * a * x[i] * x[i] - x[i];
    }
    return f;
  };
}

}  // namespace

TEST_CASE("Adam single step follows the bias-corrected formula") {
  AdamState s(1);
  std::vector<double> x{1.0};
  const std::vector<double> g{0.5};
  s.step(x, g);
  // m_hat = g, v_hat = g^2, so the first step moves by alpha g / (|g| + eps)
  CHECK(x[0] == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("Adam trace has iters + 1 entries and decreases on a quadratic") {
  const auto r = adam_run(quadratic(5), std::vector<double>(5, 0.0), 200, {0.05});
  CHECK(r.trace.size() == 201);
  CHECK(r.trace.back() < r.trace.front());
}

TEST_CASE("Adam aborts on a non-finite objective") {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 1.0;
    return x[0] < 1.0 ? std::nan("") : x[0];
  };
  CHECK_THROWS_AS(adam_run(f, {1.0}, 10), OptimizerAbort);
}

TEST_CASE("L-BFGS solves Rosenbrock") {
  const auto r = lbfgs_run(rosenbrock, {-1.2, 1.0}, 500);
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] < r.trace[k - 1]);
}

TEST_CASE("L-BFGS with exact line search on a quadratic terminates like CG") {
  // With c2 small the strong Wolfe step is nearly exact; n distinct eigenvalues need about n steps.
  LbfgsConfig cfg;
  cfg.c2 = 1e-3;
  cfg.grad_tol = 1e-10;
  const auto r = lbfgs_run(quadratic(6), std::vector<double>(6, 0.0), 50, cfg);
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.iterations <= 8);
  for (int i = 0; i < 6; ++i) CHECK(r.x[i] == doctest::Approx(1.0 / (i + 1)).epsilon(1e-8));
}

TEST_CASE("L-BFGS returns immediately at a stationary point") {
  const auto r = lbfgs_run(quadratic(3), {1.0, 0.5, 1.0 / 3.0}, 10);
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.iterations == 0);
  CHECK(r.trace.size() == 1);
}

TEST_CASE("curvature filter rejects non-positive pairs") {
  LbfgsMemory m(2);
  CHECK(!m.push({1.0, 0.0}, {-1.0, 0.0}));
  CHECK(m.push({1.0, 0.0}, {2.0, 0.0}));
  CHECK(m.push({0.0, 1.0}, {0.0, 3.0}));
  CHECK(m.push({1.0, 1.0}, {1.0, 1.0}));
  CHECK(m.size() == 2);
}

TEST_CASE("two-loop recursion reproduces the inverse Hessian of a diagonal quadratic") {
  LbfgsMemory m(5);
  m.push({1.0, 0.0}, {2.0, 0.0});
  m.push({0.0, 1.0}, {0.0, 4.0});
  const std::vector<double> g{2.0, 4.0};
  const auto d = m.direction(g);
  CHECK(d[0] == doctest::Approx(-1.0));
  CHECK(d[1] == doctest::Approx(-1.0));
}

TEST_CASE("function tolerance stops a stalled run") {
  LbfgsConfig cfg;
  cfg.f_tol = 1e-2;
  cfg.grad_tol = 0.0;
  const auto r = lbfgs_run(rosenbrock, {-1.2, 1.0}, 500, cfg);
  CHECK(r.status == LbfgsStatus::FunctionTolerance);
  CHECK(r.iterations < 500);
}
