#include "pfpinn/solver.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pfpinn::solver {

namespace fs = std::filesystem;

namespace {

int gauss_of(const RunConfig& cfg, const Problem& p) { return cfg.gauss_per_dim > 0 ? cfg.gauss_per_dim : p.default_gauss; }

Problem build_problem(const RunConfig& cfg) {
  cfg.validate();
  return make_problem(cfg.preset, cfg.material, cfg.refinement_levels);
}

// Cauchy stress sigma = g dPsi+/deps + dPsi-/deps at one evaluated point.
Eigen::Matrix3d degraded_stress(const FieldBlock& fb, Eigen::Index p, const fracture::Material& mat,
                                fracture::SplitMode split, bool crack) {
  const int d = fb.dim;
  Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) eps(i, j) = 0.5 * (fb.DF[j](i, p) + fb.DF[i](j, p));
  const auto s = fracture::split_with_stress(eps, d, mat, split);
  const double g = crack ? fracture::degradation(fb.F(d, p)) : 1.0;
  return g * s.dplus + s.dminus;
}

std::string step_file(const std::string& stem, int step, const std::string& ext) {
  return stem + "_step" + std::to_string(step) + ext;
}

}  // namespace

Solver::Solver(RunConfig cfg)
    : cfg_(std::move(cfg)),
      problem_(build_problem(cfg_)),
      cloud_(quadrature::build_cloud(problem_.mesh, problem_.patches, gauss_of(cfg_, problem_))),
      grid_(make_grid(problem_, cfg_.grid > 0 ? cfg_.grid : problem_.default_grid)),
      assembler_(problem_, cfg_.material, cloud_, cfg_.network, {cfg_.history, cfg_.chunk, cfg_.threads}),
      params_(network::init_xavier(cfg_.network, cfg_.seed)) {
  for (const auto& face : problem_.loaded_faces)
    faces_.push_back(quadrature::build_boundary_cloud(problem_.mesh, problem_.patches, face, gauss_of(cfg_, problem_)));
  H_cloud_.values = seed_history(problem_, cloud_.points, cfg_.material, cfg_.history_B);
  H_grid_.values = seed_history(problem_, grid_.points, cfg_.material, cfg_.history_B);
  grid_crack_.assign(grid_.points.size(), 1);
  for (std::size_t i = 0; i < grid_.points.size(); ++i)
    for (const auto& box : problem_.elastic_boxes)
      if (box.contains(grid_.points[i], problem_.dim)) grid_crack_[i] = 0;
}

void Solver::set_params(network::MlpParams params) {
  if (!(params.arch == cfg_.network)) throw InputError("parameters do not match the configured architecture");
  params_ = std::move(params);
}

EnergyValue Solver::energy(double load) {
  assembler_.set_load(load);
  assembler_.set_history(H_cloud_.values);
  assembler_.freeze_below(0, params_);
  return assembler_.evaluate(params_, nullptr);
}

StepReport Solver::train_step() {
  const auto t0 = std::chrono::steady_clock::now();
  const int step = next_step();
  const int L = cfg_.network.num_layers();
  StepReport rep;
  rep.step = step;
  rep.displacement = displacement(step);
  rep.transfer = cfg_.transfer && step >= 1;
  const Budget budget = rep.transfer ? cfg_.transfer_budget : cfg_.budget;
  const network::FreezeMask mask = rep.transfer ? network::FreezeMask::last_layer_only(L) : network::FreezeMask::all(L);
  const network::TrainableView view(cfg_.network, mask);

  assembler_.set_load(rep.displacement);
  assembler_.set_history(H_cloud_.values);
  assembler_.set_policy(cfg_.history);
  assembler_.freeze_below(mask.first_trainable(), params_);

  std::vector<double> flat = network::flatten(params_).values;
  network::MlpParams work = params_;
  network::MlpParams grad = network::zeros(cfg_.network);
  const optimize::Objective objective = [&](std::span<const double> x, std::span<double> g) {
    view.scatter(x, flat);
    network::unflatten_into(flat, work);
    for (int l = 0; l < L; ++l) {
      grad.weights[l].setZero();
      grad.biases[l].setZero();
    }
    const double v = assembler_.evaluate(work, &grad).total;
    const std::vector<double> gv = view.gather(network::flatten(grad).values);
    std::copy(gv.begin(), gv.end(), g.begin());
    return v;
  };

  trace_.clear();
  std::vector<double> x = view.gather(flat);
  try {
    const optimize::AdamResult adam = optimize::adam_run(objective, x, budget.adam_iters, cfg_.adam);
    for (std::size_t k = 0; k < adam.trace.size(); ++k) trace_.push_back({static_cast<int>(k), "adam", adam.trace[k]});
    const optimize::LbfgsResult lb = optimize::lbfgs_run(objective, adam.x, budget.lbfgs_iters, cfg_.lbfgs);
    for (std::size_t k = 1; k < lb.trace.size(); ++k)
      trace_.push_back({budget.adam_iters + static_cast<int>(k), "lbfgs", lb.trace[k]});
    rep.adam_iters = budget.adam_iters;
    rep.lbfgs_iters = lb.iterations;
    rep.lbfgs_status = lb.status;
    rep.loss_initial = adam.trace.front();
    rep.loss_final = lb.trace.back();
    x = lb.x;
  } catch (const optimize::OptimizerAbort& e) {
    for (std::size_t k = 0; k < e.trace.size(); ++k) trace_.push_back({static_cast<int>(k), "abort", e.trace[k]});
    view.scatter(e.last_x, flat);
    network::unflatten_into(flat, params_);
    std::string path;
    if (cfg_.checkpoints) {
      fs::create_directories(cfg_.out_dir);
      path = (fs::path(cfg_.out_dir) / "checkpoint_failed.bin").string();
      network::save_checkpoint(path, {cfg_.network, cfg_.seed, step, flat});
    }
    throw SolveError("step " + std::to_string(step) + ": " + e.what(), path);
  }

  view.scatter(x, flat);
  network::unflatten_into(flat, params_);
  rep.energy = assembler_.evaluate(params_, nullptr);

  // Commit the history at the Gauss points and on the prediction grid.
  H_cloud_.commit(assembler_.psi_plus(params_), step);
  const FieldBlock fb = evaluate_fields(params_, problem_.transform, rep.displacement, grid_.points);
  std::vector<double> grid_psi(grid_.points.size(), 0.0);
  for (std::size_t p = 0; p < grid_.points.size(); ++p) {
    if (!grid_crack_[p]) continue;
    const auto col = static_cast<Eigen::Index>(p);
    Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
    for (int i = 0; i < problem_.dim; ++i)
      for (int j = 0; j < problem_.dim; ++j) eps(i, j) = 0.5 * (fb.DF[j](i, col) + fb.DF[i](j, col));
    grid_psi[p] = fracture::split_with_stress(eps, problem_.dim, cfg_.material, problem_.split).psi.plus;
  }
  H_grid_.commit(grid_psi, step);

  rep.load = reaction_load(rep.displacement);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  reports_.push_back(rep);
  return rep;
}

double Solver::reaction_load(double load) const { return reaction_load(load, problem_.reaction); }

double Solver::reaction_load(double load, ReactionMode mode) const {
  const int d = problem_.dim;
  double total = 0.0;
  if (mode == ReactionMode::Traction) {
    if (faces_.empty()) throw InputError("reaction load: the preset has no loaded boundary");
    for (const auto& face : faces_) {
      const FieldBlock fb = evaluate_fields(params_, problem_.transform, load, face.cloud.points);
      for (std::size_t p = 0; p < face.cloud.size(); ++p) {
        bool crack = true;
        for (const auto& box : problem_.elastic_boxes)
          if (box.contains(face.cloud.points[p], d)) crack = false;
        const Eigen::Matrix3d sigma =
            degraded_stress(fb, static_cast<Eigen::Index>(p), cfg_.material, problem_.split, crack);
        const Eigen::Vector3d n(face.normals[p][0], face.normals[p][1], face.normals[p][2]);
        total += face.cloud.weights[p] * (sigma * n)(problem_.load_direction);
      }
    }
  } else {
    const FieldBlock fb = evaluate_fields(params_, problem_.transform, load, cloud_.points);
    const CoefficientTable coef = coefficient_table(problem_.transform, cloud_.points);
    const auto& crack = assembler_.crack_mask();
    for (std::size_t p = 0; p < cloud_.size(); ++p) {
      const auto col = static_cast<Eigen::Index>(p);
      const Eigen::Matrix3d sigma = degraded_stress(fb, col, cfg_.material, problem_.split, crack[p] != 0);
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) s += sigma(i, k) * coef.dA1[k](i, col);
      total += cloud_.weights[p] * s;
    }
  }
  return problem_.load_scale * total;
}

FieldTable Solver::predict_fields(double load) const {
  FieldTable t;
  t.dim = problem_.dim;
  t.x = grid_.points;
  t.fields = evaluate_fields(params_, problem_.transform, load, grid_.points).F;
  for (std::size_t p = 0; p < grid_.points.size(); ++p)
    if (!grid_crack_[p]) t.fields(problem_.dim, static_cast<Eigen::Index>(p)) = 0.0;
  t.H = H_grid_.values;
  return t;
}

void Solver::write_step() const {
  if (reports_.empty()) throw std::logic_error("write_step: no step has been solved");
  const StepReport& rep = reports_.back();
  const fs::path dir(cfg_.out_dir);
  fs::create_directories(dir);
  const FieldTable table = predict_fields(rep.displacement);
  {
    std::ofstream os(dir / step_file("fields", rep.step, ".csv"));
    write_fields_csv(os, table);
  }
  {
    std::ofstream os(dir / step_file("loss", rep.step, ".csv"));
    os << "iter,phase,loss\n" << std::setprecision(17);
    for (const auto& r : trace_) os << r.iter << "," << r.phase << "," << r.loss << "\n";
  }
  {
    std::ofstream os(dir / "load_disp.csv");
    os << "step,displacement,load\n" << std::setprecision(17);
    for (const auto& r : reports_) os << r.step << "," << r.displacement << "," << r.load << "\n";
  }
  if (cfg_.checkpoints)
    network::save_checkpoint((dir / step_file("checkpoint", rep.step, ".bin")).string(),
                             {cfg_.network, cfg_.seed, rep.step, network::flatten(params_).values});
  if (cfg_.vtk) {
    const std::size_t per_patch = grid_.points.size() / problem_.patches.size();
    for (std::size_t k = 0; k < problem_.patches.size(); ++k) {
      const std::string name = problem_.patches.size() == 1
                                   ? step_file("fields", rep.step, ".vtk")
                                   : step_file("fields", rep.step, "_patch" + std::to_string(k) + ".vtk");
      std::ofstream os(dir / name);
      write_vtk(os, table, k * per_patch, grid_.res, problem_.dim);
    }
  }
}

void Solver::run(const std::function<void(const StepReport&)>& on_step) {
  for (int i = next_step(); i < cfg_.n_steps; ++i) {
    const StepReport rep = train_step();
    write_step();
    if (on_step) on_step(rep);
  }
}

L2Errors l2_errors(const Problem& problem, const FieldTable& table) {
  if (!problem.exact) throw InputError("preset '" + problem.name + "' has no analytic solution");
  const int d = problem.dim;
  double nu = 0.0, du = 0.0, np = 0.0, dp = 0.0;
  for (std::size_t p = 0; p < table.x.size(); ++p) {
    const auto ex = problem.exact(table.x[p]);
    const auto col = static_cast<Eigen::Index>(p);
    for (int i = 0; i < d; ++i) {
      const double e = table.fields(i, col) - ex[i];
      nu += e * e;
      du += ex[i] * ex[i];
    }
    const double e = table.fields(d, col) - ex[d];
    np += e * e;
    dp += ex[d] * ex[d];
  }
  return {std::sqrt(nu / du), std::sqrt(np / dp)};
}

void write_fields_csv(std::ostream& os, const FieldTable& t) {
  static const char* xs[] = {"x", "y", "z"};
  static const char* us[] = {"u", "v", "w"};
  for (int k = 0; k < t.dim; ++k) os << xs[k] << ",";
  for (int k = 0; k < t.dim; ++k) os << us[k] << ",";
  os << "phi,H\n" << std::setprecision(12);
  for (std::size_t p = 0; p < t.x.size(); ++p) {
    for (int k = 0; k < t.dim; ++k) os << t.x[p][k] << ",";
    for (int i = 0; i <= t.dim; ++i) os << t.fields(i, static_cast<Eigen::Index>(p)) << ",";
    os << t.H[p] << "\n";
  }
}

FieldTable read_fields_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("fields file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const int cols = static_cast<int>(header.size());
  if (cols < 4 || (cols - 2) % 2 != 0 || header[cols - 2] != "phi" || header[cols - 1] != "H")
    throw InputError("fields file header must be x[,y[,z]],u[,v[,w]],phi,H");
  FieldTable t;
  t.dim = (cols - 2) / 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != cols) throw InputError("fields file: ragged row");
    rows.push_back(std::move(row));
  }
  t.fields.resize(t.dim + 1, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Point x{0.0, 0.0, 0.0};
    for (int k = 0; k < t.dim; ++k) x[k] = rows[r][k];
    t.x.push_back(x);
    for (int i = 0; i <= t.dim; ++i) t.fields(i, static_cast<Eigen::Index>(r)) = rows[r][t.dim + i];
    t.H.push_back(rows[r][cols - 1]);
  }
  return t;
}

void write_vtk(std::ostream& os, const FieldTable& t, std::size_t begin, int res, int dim) {
  const int ny = dim > 1 ? res : 1, nz = dim > 2 ? res : 1;
  const std::size_t n = static_cast<std::size_t>(res) * ny * nz;
  os << "# vtk DataFile Version 3.0\nphase-field PINN fields\nASCII\nDATASET STRUCTURED_GRID\n";
  os << "DIMENSIONS " << res << " " << ny << " " << nz << "\nPOINTS " << n << " double\n" << std::setprecision(12);
  for (std::size_t p = begin; p < begin + n; ++p) os << t.x[p][0] << " " << t.x[p][1] << " " << t.x[p][2] << "\n";
  os << "POINT_DATA " << n << "\n";
  os << "VECTORS displacement double\n";
  for (std::size_t p = begin; p < begin + n; ++p) {
    for (int k = 0; k < 3; ++k) os << (k < dim ? t.fields(k, static_cast<Eigen::Index>(p)) : 0.0) << (k < 2 ? " " : "\n");
  }
  os << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (std::size_t p = begin; p < begin + n; ++p) os << t.fields(dim, static_cast<Eigen::Index>(p)) << "\n";
  os << "SCALARS H double 1\nLOOKUP_TABLE default\n";
  for (std::size_t p = begin; p < begin + n; ++p) os << t.H[p] << "\n";
}

}  // namespace pfpinn::solver
