#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pfpinn/energy.hpp"

using namespace pfpinn;
using namespace pfpinn::solver;

namespace {

// Unconstrained problem on a box with one patch, no crack and no body force.
Problem plain_box(int dim, const Point& hi, int spans) {
  Problem p;
  p.name = "box";
  p.dim = dim;
  p.patches.push_back(geometry::box_patch(dim, {0, 0, 0}, hi, {spans, spans, spans}));
  p.mesh = geometry::ElementMesh::from_knot_spans(0, p.patches[0]);
  p.transform = {network::TransformKind::Identity, dim};
  return p;
}

// Network without hidden layers: raw output = W x + b.
network::MlpParams linear_net(const Eigen::MatrixXd& W) {
  network::MlpArchitecture arch{{static_cast<int>(W.cols()), static_cast<int>(W.rows())}};
  auto p = network::zeros(arch);
  p.weights[0] = W;
  return p;
}

PointFields random_fields(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1e-2, 1e-2), Phi(0.0, 0.9);
  PointFields f;
  f.dim = d;
  for (int i = 0; i < d; ++i) {
    f.F[i] = U(rng);
    for (int k = 0; k < d; ++k) f.DF[i][k] = U(rng);
  }
  f.F[d] = Phi(rng);
  for (int k = 0; k < d; ++k) f.DF[d][k] = 10.0 * U(rng);
  return f;
}

}  // namespace

TEST_CASE("hand-derived density derivatives agree with the traced density") {
  const fracture::Material mat{121.15, 80.77, 2.7e-3, 0.0125};
  std::mt19937_64 rng(21);
  for (int d = 1; d <= 3; ++d)
    for (auto policy : {HistoryPolicy::Live, HistoryPolicy::Frozen})
      for (bool crack : {true, false})
        for (auto split : {fracture::SplitMode::Spectral, fracture::SplitMode::None})
          for (int t = 0; t < 10; ++t) {
            const PointFields f = random_fields(d, rng);
            PointContext ctx{&mat, split, policy, t % 2 ? 0.0 : 5e-3, crack, {0.3, -0.2, 0.1}};
            const PointTerms hand = point_energy(f, ctx);
            std::vector<double> z;
            for (int i = 0; i <= d; ++i) z.push_back(f.F[i]);
            for (int i = 0; i <= d; ++i)
              for (int k = 0; k < d; ++k) z.push_back(f.DF[i][k]);
            const auto vg = ad::grad_params(
                [&](std::span<const ad::Var> v) {
                  return point_density<ad::Var>(d, v.subspan(0, d + 1), v.subspan(d + 1), ctx);
                },
                z);
            CHECK(vg.value == doctest::Approx(hand.value).epsilon(1e-13));
            for (int i = 0; i <= d; ++i) {
              CHECK(vg.gradient[i] == doctest::Approx(hand.Fbar[i]).epsilon(1e-10).scale(1e-8));
              for (int k = 0; k < d; ++k)
                CHECK(vg.gradient[d + 1 + i * d + k] == doctest::Approx(hand.DFbar[i][k]).epsilon(1e-10).scale(1e-8));
            }
          }
}

TEST_CASE("zero network with zero load and no history gives zero energy on the bar") {
  const auto mat = default_material("bar1d");
  const auto problem = make_problem("bar1d", mat);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, problem.default_gauss);
  const network::MlpArchitecture arch{{1, 8, 8, 2}};
  EnergyAssembler as(problem, mat, cloud, arch, {});
  as.set_load(0.0);
  as.set_history(std::vector<double>(cloud.size(), 0.0));
  const auto params = network::zeros(arch);
  as.freeze_below(0, params);
  const auto v = as.evaluate(params, nullptr);
  CHECK(v.total == 0.0);
}

TEST_CASE("linear displacement on a unit bar stores half eps^2") {
  const fracture::Material mat{0.0, 0.5, 1.0, 0.1};
  const auto problem = plain_box(1, {1, 0, 0}, 4);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 3);
  const double e = 0.02;
  Eigen::MatrixXd W(2, 1);
  W << e, 0.0;
  const auto params = linear_net(W);
  EnergyAssembler as(problem, mat, cloud, params.arch, {HistoryPolicy::Frozen});
  as.set_history(std::vector<double>(cloud.size(), 0.0));
  as.freeze_below(0, params);
  CHECK(as.evaluate(params, nullptr).total == doctest::Approx(0.5 * e * e).epsilon(1e-13));
}

TEST_CASE("manufactured 2D field u = (a x, 0) stores a^2 per unit area") {
  const fracture::Material mat{0.0, 1.0, 1.0, 0.1};
  const auto problem = plain_box(2, {2, 1.5, 0}, 3);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 2);
  const double a = 0.03;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 2);
  W(0, 0) = a;
  const auto params = linear_net(W);
  EnergyAssembler as(problem, mat, cloud, params.arch, {HistoryPolicy::Frozen});
  as.set_history(std::vector<double>(cloud.size(), 0.0));
  as.freeze_below(0, params);
  CHECK(std::abs(as.evaluate(params, nullptr).total - a * a * 3.0) <= 1e-10);
}

TEST_CASE("assembled gradient matches central differences") {
  const auto mat = default_material("senp-tension");
  const auto problem = make_problem("senp-tension", mat, 0);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 2);
  const network::MlpArchitecture arch{{2, 6, 6, 3}};
  auto params = network::init_xavier(arch, 3);
  for (auto& W : params.weights) W *= 3.0;
  for (auto policy : {HistoryPolicy::Live, HistoryPolicy::Frozen}) {
    EnergyAssembler as(problem, mat, cloud, arch, {policy, 64, 1});
    as.set_load(2e-3);
    as.set_history(seed_history(problem, cloud.points, mat, 1000.0));
    as.freeze_below(0, params);
    auto g = network::zeros(arch);
    as.evaluate(params, &g);
    const auto theta = network::flatten(params).values;
    const auto grad = network::flatten(g).values;
    const double h = 1e-6;
    for (std::size_t i = 0; i < theta.size(); i += 7) {
      auto tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      const double fp = as.evaluate(network::unflatten(arch, tp), nullptr).total;
      const double fm = as.evaluate(network::unflatten(arch, tm), nullptr).total;
      CHECK(grad[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4).scale(1e-6));
    }
  }
}

TEST_CASE("last-layer gradient with cached lower layers equals the full gradient") {
  const auto mat = default_material("senp-tension");
  const auto problem = make_problem("senp-tension", mat, 0);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 2);
  const network::MlpArchitecture arch{{2, 6, 6, 3}};
  const auto params = network::init_xavier(arch, 4);
  EnergyAssembler as(problem, mat, cloud, arch, {});
  as.set_load(1e-3);
  as.set_history(std::vector<double>(cloud.size(), 0.0));
  as.freeze_below(0, params);
  auto full = network::zeros(arch);
  const double v0 = as.evaluate(params, &full).total;
  as.freeze_below(2, params);
  auto last = network::zeros(arch);
  const double v1 = as.evaluate(params, &last).total;
  CHECK(v0 == v1);
  CHECK(last.weights[2] == full.weights[2]);
  CHECK(last.biases[2] == full.biases[2]);
  CHECK(last.weights[0].isZero());
}

TEST_CASE("energy is independent of the thread count") {
  const auto mat = default_material("senp-tension");
  const auto problem = make_problem("senp-tension", mat, 0);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 3);
  const network::MlpArchitecture arch{{2, 10, 10, 3}};
  const auto params = network::init_xavier(arch, 5);
  auto run = [&](int threads) {
    EnergyAssembler as(problem, mat, cloud, arch, {HistoryPolicy::Live, 100, threads});
    as.set_load(1e-3);
    as.set_history(seed_history(problem, cloud.points, mat, 1000.0));
    as.freeze_below(0, params);
    auto g = network::zeros(arch);
    const double v = as.evaluate(params, &g).total;
    return std::make_pair(v, network::flatten(g).values);
  };
  const auto a = run(1), b = run(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("elastic boxes carry no fracture energy") {
  const auto mat = default_material("asym-bend-3holes");
  const auto problem = make_problem("asym-bend-3holes", mat, 0);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 2);
  const network::MlpArchitecture arch{{2, 5, 3}};
  EnergyAssembler as(problem, mat, cloud, arch, {});
  int inside = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool in_box = cloud.points[i][0] <= 3.0 || cloud.points[i][0] >= 17.0;
    CHECK((as.crack_mask()[i] == 0) == in_box);
    inside += in_box;
  }
  CHECK(inside > 0);
}

TEST_CASE("non-finite density names the point") {
  const auto mat = default_material("bar1d");
  const auto problem = make_problem("bar1d", mat);
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, problem.default_gauss);
  const network::MlpArchitecture arch{{1, 4, 2}};
  EnergyAssembler as(problem, mat, cloud, arch, {HistoryPolicy::Frozen});
  std::vector<double> H(cloud.size(), 0.0);
  H[5] = std::nan("");
  as.set_history(H);
  const auto params = network::init_xavier(arch, 1);
  as.freeze_below(0, params);
  CHECK_THROWS_AS(as.evaluate(params, nullptr), std::domain_error);
}
