#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pfpinn/solver.hpp"

using namespace pfpinn;
using namespace pfpinn::solver;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Coarse senp run with a small network and short budgets.
RunConfig small_senp(const std::string& out) {
  RunConfig c;
  c.preset = "senp-tension";
  c.material = default_material("senp-tension");
  c.network.layer_sizes = {2, 10, 10, 3};
  c.seed = 11;
  c.gauss_per_dim = 2;
  c.refinement_levels = 0;
  c.delta_u = 1e-3;
  c.n_steps = 3;
  c.budget = {60, 40};
  c.transfer_budget = {0, 20};
  c.grid = 11;
  c.out_dir = (fs::temp_directory_path() / out).string();
  fs::remove_all(c.out_dir);
  return c;
}

}  // namespace

TEST_CASE("a step never ends above its starting energy") {
  RunConfig c = small_senp("pfpinn_step");
  c.delta_u = 0.0;
  c.n_steps = 1;
  Solver s(c);
  const auto r = s.train_step();
  CHECK(r.loss_final <= r.loss_initial);
  CHECK(std::isfinite(r.energy.total));
  CHECK(r.energy.fracture >= 0.0);
}

TEST_CASE("committed history never decreases and transfer freezes lower layers") {
  const RunConfig c = small_senp("pfpinn_hist");
  Solver s(c);
  std::vector<double> prev_cloud = s.cloud_history().values, prev_grid = s.grid_history().values;
  network::MlpParams step1;
  for (int i = 0; i < c.n_steps; ++i) {
    const auto r = s.train_step();
    CHECK(r.transfer == (i >= 1));
    for (std::size_t k = 0; k < prev_cloud.size(); ++k) CHECK(s.cloud_history().values[k] >= prev_cloud[k]);
    for (std::size_t k = 0; k < prev_grid.size(); ++k) CHECK(s.grid_history().values[k] >= prev_grid[k]);
    prev_cloud = s.cloud_history().values;
    prev_grid = s.grid_history().values;
    if (i == 0) step1 = s.params();
  }
  for (int l = 0; l + 1 < c.network.num_layers(); ++l) {
    CHECK(s.params().weights[l] == step1.weights[l]);
    CHECK(s.params().biases[l] == step1.biases[l]);
  }
}

TEST_CASE("L-BFGS trace strictly decreases on accepted iterates") {
  Solver s(small_senp("pfpinn_trace"));
  s.train_step();
  double last = 0.0;
  bool first = true;
  for (const auto& r : s.last_trace()) {
    if (r.phase != "lbfgs") continue;
    if (!first) CHECK(r.loss < last);
    last = r.loss;
    first = false;
  }
}

TEST_CASE("warm start: a repeated step needs fewer L-BFGS iterations") {
  RunConfig c = small_senp("pfpinn_warm");
  c.delta_u = 0.0;
  c.n_steps = 2;
  c.transfer = false;
  c.budget = {0, 200};
  c.lbfgs.f_tol = 1e-9;
  Solver s(c);
  const auto a = s.train_step();
  const auto b = s.train_step();
  CHECK(b.lbfgs_iters < a.lbfgs_iters);
}

TEST_CASE("a single step with transfer enabled equals one without") {
  RunConfig a = small_senp("pfpinn_tl_a"), b = small_senp("pfpinn_tl_b");
  a.n_steps = b.n_steps = 1;
  b.transfer = false;
  Solver sa(a), sb(b);
  sa.run();
  sb.run();
  CHECK(network::flatten(sa.params()).values == network::flatten(sb.params()).values);
}

TEST_CASE("reaction load: zero at zero displacement, (lambda + 2 mu) delta for uniaxial strain") {
  RunConfig c = small_senp("pfpinn_reaction");
  Solver s(c);
  s.set_params(network::zeros(c.network));
  CHECK(std::abs(s.reaction_load(0.0)) <= 1e-10);
  // raw outputs zero: u = 0, v = y delta, phi = 0
  const double delta = 1e-3;
  const auto& m = c.material;
  CHECK(s.reaction_load(delta) == doctest::Approx(1000.0 * (m.lambda + 2.0 * m.mu) * delta).epsilon(1e-12));
}

TEST_CASE("run writes the artifacts with one load row per step") {
  const RunConfig c = small_senp("pfpinn_run");
  Solver s(c);
  int seen = 0;
  s.run([&](const StepReport&) { ++seen; });
  CHECK(seen == 3);
  const fs::path dir(c.out_dir);
  for (int i = 0; i < 3; ++i) {
    CHECK(fs::exists(dir / ("fields_step" + std::to_string(i) + ".csv")));
    CHECK(fs::exists(dir / ("loss_step" + std::to_string(i) + ".csv")));
    CHECK(fs::exists(dir / ("checkpoint_step" + std::to_string(i) + ".bin")));
  }
  std::ifstream is(dir / "load_disp.csv");
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
  const auto cp = network::load_checkpoint((dir / "checkpoint_step2.bin").string());
  CHECK(cp.params == network::flatten(s.params()).values);
  CHECK(cp.step == 2);
}

TEST_CASE("identical configurations give bitwise identical outputs") {
  const RunConfig a = small_senp("pfpinn_det_a"), b = small_senp("pfpinn_det_b");
  Solver sa(a), sb(b);
  sa.run();
  sb.run();
  CHECK(slurp(fs::path(a.out_dir) / "load_disp.csv") == slurp(fs::path(b.out_dir) / "load_disp.csv"));
  CHECK(slurp(fs::path(a.out_dir) / "checkpoint_step2.bin") == slurp(fs::path(b.out_dir) / "checkpoint_step2.bin"));
}

TEST_CASE("prediction grid rows on the Dirichlet boundary hold the prescribed values") {
  RunConfig c = small_senp("pfpinn_grid");
  c.n_steps = 1;
  Solver s(c);
  s.train_step();
  const auto t = s.predict_fields(c.delta_u);
  for (std::size_t p = 0; p < t.x.size(); ++p) {
    const auto col = static_cast<Eigen::Index>(p);
    if (t.x[p][1] == 1.0) CHECK(t.fields(1, col) == doctest::Approx(c.delta_u).epsilon(1e-15));
    if (t.x[p][1] == 0.0) CHECK(t.fields(1, col) == 0.0);
    if (t.x[p][0] == 0.0) CHECK(t.fields(0, col) == 0.0);
  }
}

TEST_CASE("L2 errors: exact fields give zero, zero fields give one") {
  const auto problem = make_problem("bar1d", default_material("bar1d"));
  FieldTable t;
  t.dim = 1;
  for (int i = 0; i <= 200; ++i) t.x.push_back({-1.0 + i * 0.01, 0.0, 0.0});
  t.fields.resize(2, static_cast<Eigen::Index>(t.x.size()));
  for (std::size_t p = 0; p < t.x.size(); ++p) {
    const auto e = problem.exact(t.x[p]);
    t.fields(0, static_cast<Eigen::Index>(p)) = e[0];
    t.fields(1, static_cast<Eigen::Index>(p)) = e[1];
  }
  t.H.assign(t.x.size(), 0.0);
  auto err = l2_errors(problem, t);
  CHECK(err.u == 0.0);
  CHECK(err.phi == 0.0);
  t.fields.setZero();
  err = l2_errors(problem, t);
  CHECK(err.u == doctest::Approx(1.0));
  CHECK(err.phi == doctest::Approx(1.0));
}

TEST_CASE("fields CSV round-trip") {
  FieldTable t;
  t.dim = 2;
  t.x = {{0.1, 0.2, 0.0}, {0.3, 0.4, 0.0}};
  t.fields.resize(3, 2);
  t.fields << 1e-3, 2e-3, -4e-4, 5e-4, 0.25, 0.75;
  t.H = {0.5, 1.5};
  std::stringstream ss;
  write_fields_csv(ss, t);
  CHECK(ss.str().rfind("x,y,u,v,phi,H\n", 0) == 0);
  const auto back = read_fields_csv(ss);
  CHECK(back.dim == 2);
  CHECK(back.x[1][1] == doctest::Approx(0.4));
  CHECK((back.fields - t.fields).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(back.H == t.H);
}
