#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "pfpinn/network.hpp"

using namespace pfpinn;
using namespace pfpinn::network;

namespace {

Eigen::MatrixXd random_points(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::MatrixXd X(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) X(i, j) = U(rng);
  return X;
}

}  // namespace

TEST_CASE("flatten and unflatten round-trip") {
  const MlpArchitecture arch{{2, 5, 4, 3}};
  const auto p = init_xavier(arch, 9);
  const auto flat = flatten(p);
  CHECK(flat.size() == arch.num_params());
  CHECK(flat.segments.size() == 4);
  const auto q = unflatten(arch, flat.values);
  for (int l = 0; l < arch.num_layers(); ++l) {
    CHECK(q.weights[l] == p.weights[l]);
    CHECK(q.biases[l] == p.biases[l]);
  }
  CHECK(arch.layer_offset(1) == 2 * 5 + 5);
}

TEST_CASE("Xavier initialization is reproducible and zero-bias") {
  const MlpArchitecture arch{{3, 50, 50, 4}};
  const auto a = init_xavier(arch, 5), b = init_xavier(arch, 5), c = init_xavier(arch, 6);
  CHECK(flatten(a).values == flatten(b).values);
  CHECK(flatten(a).values != flatten(c).values);
  CHECK(a.biases[0].isZero());
  // sample std of the 50x50 layer against sqrt(2 / 100)
  const auto& W = a.weights[1];
  const double var = W.array().square().mean() - W.mean() * W.mean();
  CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("batched forward agrees with the scalar forward pass") {
  const MlpArchitecture arch{{2, 6, 6, 3}};
  const auto p = init_xavier(arch, 1);
  const auto X = random_points(2, 7, 2);
  BatchTrace tr;
  batch_forward(p, X, tr);
  for (int j = 0; j < X.cols(); ++j) {
    const std::vector<double> x{X(0, j), X(1, j)};
    const auto o = forward<double>(p, x);
    for (int i = 0; i < 3; ++i) CHECK(tr.out(i, j) == doctest::Approx(o[i]).epsilon(1e-14));
  }
}

TEST_CASE("cached lower layers give the same pass as a full pass") {
  const MlpArchitecture arch{{2, 6, 6, 3}};
  auto p = init_xavier(arch, 1);
  const auto X = random_points(2, 5, 3);
  BatchTrace cached;
  batch_forward(p, X, cached);
  p.weights[2](0, 0) += 0.5;
  p.biases[2](1) -= 0.25;
  batch_forward(p, X, cached, 2);
  BatchTrace full;
  batch_forward(p, X, full);
  CHECK(cached.out == full.out);
  for (int k = 0; k < 2; ++k) CHECK(cached.dout[k] == full.dout[k]);
}

TEST_CASE("stop_layer leaves lower-layer gradients untouched") {
  const MlpArchitecture arch{{1, 4, 4, 2}};
  const auto p = init_xavier(arch, 4);
  const auto X = random_points(1, 3, 5);
  BatchTrace tr;
  batch_forward(p, X, tr);
  const Eigen::MatrixXd ob = Eigen::MatrixXd::Ones(2, 3);
  const std::vector<Eigen::MatrixXd> db{Eigen::MatrixXd::Ones(2, 3)};
  auto g = zeros(arch);
  batch_backward(p, tr, ob, db, 2, g);
  CHECK(g.weights[0].isZero());
  CHECK(g.weights[1].isZero());
  CHECK(!g.weights[2].isZero());
  auto full = zeros(arch);
  batch_backward(p, tr, ob, db, 0, full);
  CHECK(full.weights[2] == g.weights[2]);
}

TEST_CASE("trainable view gathers and scatters the last layer only") {
  const MlpArchitecture arch{{2, 3, 3, 3}};
  const auto mask = FreezeMask::last_layer_only(arch.num_layers());
  CHECK(mask.first_trainable() == 2);
  const TrainableView view(arch, mask);
  CHECK(view.size() == 3 * 3 + 3);
  std::vector<double> flat(arch.num_params());
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<double>(i);
  auto x = view.gather(flat);
  CHECK(x.front() == static_cast<double>(arch.layer_offset(2)));
  for (auto& v : x) v = -1.0;
  auto out = flat;
  view.scatter(x, out);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(out[i] == (i < arch.layer_offset(2) ? flat[i] : -1.0));
}

TEST_CASE("architecture validation") {
  const MlpArchitecture single{{2}}, empty_layer{{2, 0, 3}}, wrong_out{{2, 5, 2}}, good{{2, 5, 3}};
  CHECK_THROWS_AS(single.validate(), InputError);
  CHECK_THROWS_AS(empty_layer.validate(), InputError);
  CHECK_THROWS_AS(wrong_out.validate_for_dimension(2), InputError);
  CHECK_NOTHROW(good.validate_for_dimension(2));
}

TEST_CASE("transforms vanish on their Dirichlet boundaries") {
  const OutputTransform senp{TransformKind::SenpTension, 2};
  const auto top = transform_coefficients(senp, {0.3, 1.0, 0.0}, 0.004);
  CHECK(top.B[1] == 0.0);
  CHECK(top.A[1] == 0.004);
  const auto left = transform_coefficients(senp, {0.0, 0.6, 0.0}, 0.004);
  CHECK(left.B[0] == 0.0);
  CHECK(left.B[2] == 1.0);
  const OutputTransform bar{TransformKind::Bar1d, 1};
  CHECK(transform_coefficients(bar, {-1.0, 0, 0}, 0.0).B[0] == 0.0);
  CHECK(transform_coefficients(bar, {0.5, 0, 0}, 0.0).dB[0][0] == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round-trip is exact") {
  const MlpArchitecture arch{{3, 7, 4}};
  const Checkpoint cp{arch, 77, 3, flatten(init_xavier(arch, 12)).values};
  std::stringstream ss;
  write_checkpoint(ss, cp);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "PFPN");
  const auto back = read_checkpoint(ss);
  CHECK(back.arch == arch);
  CHECK(back.seed == 77);
  CHECK(back.step == 3);
  CHECK(back.params == cp.params);
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(read_checkpoint(bad), InputError);
  const MlpArchitecture arch{{1, 2, 2}};
  std::stringstream ss;
  write_checkpoint(ss, {arch, 0, 0, std::vector<double>(arch.num_params(), 1.0)});
  std::string s = ss.str();
  s.resize(s.size() - 5);
  std::stringstream cut(s);
  CHECK_THROWS_AS(read_checkpoint(cut), InputError);
}
