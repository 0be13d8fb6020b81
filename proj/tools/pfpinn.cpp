// pfpinn: command-line driver.
//
//   pfpinn solve --config configs/bar1d.json [--out DIR] [--seed N] [--steps N]
//                [--threads N] [--history frozen|live] [--no-transfer]
//   pfpinn check ad|quadrature|split|bc [--seed N]
//   pfpinn errors --fields out/fields_step0.csv --preset bar1d [--l0 X]
//   pfpinn export-cloud --config FILE --out cloud.csv

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "pfpinn/checks.hpp"
#include "pfpinn/config.hpp"
#include "pfpinn/solver.hpp"

using namespace pfpinn;

namespace {

struct SolveArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> threads;
  std::optional<std::string> history;
  bool no_transfer = false;
};

int cmd_solve(const SolveArgs& a) {
  RunConfig cfg = load_config(a.config);
  if (a.out) cfg.out_dir = *a.out;
  if (a.seed) cfg.seed = *a.seed;
  if (a.steps) cfg.n_steps = *a.steps;
  if (a.threads) cfg.threads = *a.threads;
  if (a.history) cfg.history = solver::history_policy_from_name(*a.history);
  if (a.no_transfer) cfg.transfer = false;
  cfg.validate();

  solver::Solver s(cfg);
  std::cout << "preset " << cfg.preset << ": " << s.cloud().size() << " Gauss points, "
            << cfg.network.num_params() << " parameters, " << cfg.n_steps << " step(s), history "
            << solver::history_policy_name(cfg.history) << "\n";
  std::cout << std::setprecision(6);
  try {
    s.run([](const solver::StepReport& r) {
      std::cout << "step " << r.step << (r.transfer ? " [last layer]" : "") << "  u=" << r.displacement
                << "  loss " << r.loss_initial << " -> " << r.loss_final << "  load " << r.load << "  iters "
                << r.adam_iters << "+" << r.lbfgs_iters << " (" << optimize::to_string(r.lbfgs_status) << ")  "
                << std::fixed << std::setprecision(1) << r.seconds << " s" << std::defaultfloat
                << std::setprecision(6) << std::endl;
    });
  } catch (const solver::SolveError& e) {
    std::cerr << "solve failed: " << e.what() << "\n";
    if (!e.checkpoint.empty()) std::cerr << "parameters saved to " << e.checkpoint << "\n";
    return 2;
  }

  const auto& reps = s.reports();
  const auto peak = std::max_element(reps.begin(), reps.end(),
                                     [](const auto& x, const auto& y) { return x.load < y.load; });
  std::cout << "final loss per step:";
  for (const auto& r : reps) std::cout << " " << r.loss_final;
  std::cout << "\nfailure load (peak of load-displacement) " << peak->load << " at u=" << peak->displacement
            << "\n";
  if (s.problem().exact) {
    const auto err = solver::l2_errors(s.problem(), s.predict_fields(reps.back().displacement));
    std::cout << "relative L2 error: u " << 100.0 * err.u << " %, phi " << 100.0 * err.phi << " %\n";
  }
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed) {
  const auto results = checks::run_suite(suite, seed);
  return checks::report(std::cout, results) ? 0 : 1;
}

int cmd_errors(const std::string& fields, const std::string& preset, std::optional<double> l0) {
  fracture::Material mat = solver::default_material(preset);
  if (l0) mat.l0 = *l0;
  const auto problem = solver::make_problem(preset, mat, 0);
  if (!problem.exact) throw InputError("preset '" + preset + "' has no analytic solution");
  std::ifstream is(fields);
  if (!is) throw InputError("cannot open " + fields);
  const auto table = solver::read_fields_csv(is);
  const auto err = solver::l2_errors(problem, table);
  std::cout << std::setprecision(6) << "L2_rel u " << err.u << "\nL2_rel phi " << err.phi << "\n";
  return 0;
}

int cmd_export_cloud(const std::string& config, const std::string& out) {
  const RunConfig cfg = load_config(config);
  const auto problem = solver::make_problem(cfg.preset, cfg.material, cfg.refinement_levels);
  const int n = cfg.gauss_per_dim > 0 ? cfg.gauss_per_dim : problem.default_gauss;
  const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, n);
  std::ofstream os(out);
  if (!os) throw InputError("cannot write " + out);
  quadrature::write_cloud_csv(os, cloud);
  std::cout << cloud.size() << " points from " << problem.mesh.size() << " cells written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field fracture by variational energy minimization with neural networks"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "run a displacement-stepping simulation");
  solve->add_option("--config", sa.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", sa.out, "output directory");
  solve->add_option("--seed", sa.seed, "network initialization seed");
  solve->add_option("--steps", sa.steps, "number of displacement steps")->check(CLI::PositiveNumber);
  solve->add_option("--threads", sa.threads, "worker threads for energy assembly")->check(CLI::PositiveNumber);
  solve->add_option("--history", sa.history, "history policy")->check(CLI::IsMember({"frozen", "live"}));
  solve->add_flag("--no-transfer", sa.no_transfer, "retrain all layers at every step");

  std::string suite;
  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("check", "run a verification suite");
  check->add_option("suite", suite, "ad, quadrature, split or bc")
      ->required()
      ->check(CLI::IsMember({"ad", "quadrature", "split", "bc"}));
  check->add_option("--seed", check_seed, "random seed");

  std::string fields, preset = "bar1d";
  std::optional<double> l0;
  auto* errors = app.add_subcommand("errors", "relative L2 errors of a fields file against the analytic solution");
  errors->add_option("--fields", fields, "fields CSV")->required();
  errors->add_option("--preset", preset, "preset with an analytic solution");
  errors->add_option("--l0", l0, "length scale of the analytic phase field");

  std::string cloud_config, cloud_out = "cloud.csv";
  auto* exportc = app.add_subcommand("export-cloud", "write the Gauss cloud of a configuration");
  exportc->add_option("--config", cloud_config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  exportc->add_option("--out", cloud_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(sa);
    if (*check) return cmd_check(suite, check_seed);
    if (*errors) return cmd_errors(fields, preset, l0);
    if (*exportc) return cmd_export_cloud(cloud_config, cloud_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
