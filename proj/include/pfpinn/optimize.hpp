#pragma once

// Full-batch minimizers: Adam followed by L-BFGS.

#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfpinn::optimize {

/// Returns f(x) and writes grad f(x) into `grad` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Raised when the objective produces a non-finite value; carries the loss
/// trace recorded so far and the last finite iterate.
class OptimizerAbort : public std::runtime_error {
 public:
  OptimizerAbort(const std::string& what, std::vector<double> trace, std::vector<double> last_x)
      : std::runtime_error(what), trace(std::move(trace)), last_x(std::move(last_x)) {}
  std::vector<double> trace;
  std::vector<double> last_x;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  explicit AdamState(std::size_t n, AdamConfig cfg = {}) : config(cfg), m(n, 0.0), v(n, 0.0) {}
  /// One bias-corrected update of x with gradient g.
  void step(std::span<double> x, std::span<const double> g);
};

struct AdamResult {
  std::vector<double> x;
  std::vector<double> trace;  // f at the initial point and after every update (iters + 1 entries)
};

AdamResult adam_run(const Objective& f, std::vector<double> x0, int iters, const AdamConfig& config = {});

struct LbfgsConfig {
  int memory = 20;
  double c1 = 1e-4;
  double c2 = 0.9;
  double grad_tol = 1e-8;  // on the max-norm of the gradient
  double f_tol = 0.0;      // relative decrease below which the run stops; 0 disables
  int max_linesearch = 30;
};

enum class LbfgsStatus {
  Converged,
  MaxIterations,
  FunctionTolerance,
  LineSearchFailed,
};
std::string to_string(LbfgsStatus s);

/// Limited memory of curvature pairs with the two-loop recursion.
class LbfgsMemory {
 public:
  explicit LbfgsMemory(int capacity) : capacity_(capacity) {}

  /// Stores (s, y) if s.y > 1e-12 |s| |y|; returns whether it was kept.
  bool push(std::vector<double> s, std::vector<double> y);
  /// -H g
  std::vector<double> direction(std::span<const double> g) const;
  void clear() { pairs_.clear(); }
  std::size_t size() const { return pairs_.size(); }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  const std::deque<Pair>& pairs() const { return pairs_; }

 private:
  int capacity_;
  std::deque<Pair> pairs_;
};

struct LbfgsResult {
  std::vector<double> x;
  std::vector<double> trace;  // f at the initial point and at every accepted iterate
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
  LbfgsMemory memory{0};
};

LbfgsResult lbfgs_run(const Objective& f, std::vector<double> x0, int max_iters, const LbfgsConfig& config = {});

}  // namespace pfpinn::optimize
