#pragma once

// Displacement-stepping driver: trains the network at every load step,
// commits the history field, records reaction loads and writes artifacts.

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfpinn/config.hpp"
#include "pfpinn/energy.hpp"
#include "pfpinn/problem.hpp"

namespace pfpinn::solver {

struct LossRecord {
  int iter = 0;
  std::string phase;  // "adam" or "lbfgs"
  double loss = 0.0;
};

struct StepReport {
  int step = 0;
  double displacement = 0.0;
  double load = 0.0;  // reported units (N for the kN/mm presets)
  bool transfer = false;
  double loss_initial = 0.0;
  double loss_final = 0.0;
  EnergyValue energy;
  int adam_iters = 0;
  int lbfgs_iters = 0;
  optimize::LbfgsStatus lbfgs_status = optimize::LbfgsStatus::MaxIterations;
  double seconds = 0.0;

  int total_iters() const { return adam_iters + lbfgs_iters; }
};

/// Raised when a step fails; the parameters at failure are saved first.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, std::string checkpoint)
      : std::runtime_error(what), checkpoint(std::move(checkpoint)) {}
  std::string checkpoint;
};

/// Predicted fields on the prediction grid.
struct FieldTable {
  int dim = 0;
  std::vector<Point> x;
  Eigen::MatrixXd fields;  // (dim + 1) x points: u..., phi
  std::vector<double> H;
};

class Solver {
 public:
  /// Builds the problem, Gauss cloud, prediction grid and initial network.
  /// Nothing is written to disk until run() or write_step() is called.
  explicit Solver(RunConfig cfg);
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  const RunConfig& config() const { return cfg_; }
  const Problem& problem() const { return problem_; }
  const quadrature::GaussCloud& cloud() const { return cloud_; }
  const PredictionGrid& grid() const { return grid_; }
  const network::MlpParams& params() const { return params_; }
  const fracture::HistoryField& cloud_history() const { return H_cloud_; }
  const fracture::HistoryField& grid_history() const { return H_grid_; }
  const std::vector<StepReport>& reports() const { return reports_; }
  const std::vector<LossRecord>& last_trace() const { return trace_; }
  int next_step() const { return static_cast<int>(reports_.size()); }

  /// Replaces the network parameters (architecture must match the config).
  void set_params(network::MlpParams params);

  /// Prescribed displacement of step i: (i + 1) * delta_u.
  double displacement(int step) const { return (step + 1) * cfg_.delta_u; }

  /// Energy of the current parameters at the given load against the committed history.
  EnergyValue energy(double load);

  /// Runs Adam then L-BFGS for the next step and commits parameters and history.
  StepReport train_step();

  /// Reaction load for the current parameters at the given prescribed displacement,
  /// by the preset's reaction mode or by an explicit one.
  double reaction_load(double load) const;
  double reaction_load(double load, ReactionMode mode) const;

  FieldTable predict_fields(double load) const;

  /// Writes fields, loss trace, checkpoint (and VTK) of the last step plus load_disp.csv.
  void write_step() const;

  /// All steps with outputs. `on_step` is called after every committed step.
  void run(const std::function<void(const StepReport&)>& on_step = {});

 private:
  RunConfig cfg_;
  Problem problem_;
  quadrature::GaussCloud cloud_;
  std::vector<quadrature::BoundaryCloud> faces_;
  PredictionGrid grid_;
  EnergyAssembler assembler_;
  network::MlpParams params_;
  fracture::HistoryField H_cloud_, H_grid_;
  std::vector<char> grid_crack_;
  std::vector<StepReport> reports_;
  std::vector<LossRecord> trace_;
};

/// Relative L2 errors of u and phi against the preset's analytic solution,
/// sqrt(sum (f - f_ex)^2 / sum f_ex^2) over the table points.
struct L2Errors {
  double u = 0.0;
  double phi = 0.0;
};
L2Errors l2_errors(const Problem& problem, const FieldTable& table);

void write_fields_csv(std::ostream& os, const FieldTable& t);
FieldTable read_fields_csv(std::istream& is);
void write_vtk(std::ostream& os, const FieldTable& t, std::size_t begin, int res, int dim);

}  // namespace pfpinn::solver
