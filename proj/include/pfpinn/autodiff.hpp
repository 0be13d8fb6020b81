#pragma once

// Scalar-graph reverse-mode automatic differentiation.
//
// A Tape records every operation applied to traced scalars (Var). A reverse
// sweep over the record yields the adjoint of one output with respect to every
// recorded node. Arithmetic is done in double precision and the value computed
// for a Var is bit-for-bit the value the same expression produces on plain
// doubles, so templated code can be evaluated with or without tracing.

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pfpinn::ad {

/// Raised when a primitive produces a non-finite value or partial.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& primitive, std::initializer_list<double> operands);
};

class Tape {
 public:
  struct Edge {
    int parent;
    double partial;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers an independent variable and returns its node id.
  int leaf();
  /// Records a node whose parents and local partials are given.
  int record(std::span<const Edge> edges);
  int record(int a, double da);
  int record(int a, double da, int b, double db);

  std::size_t size() const { return first_edge_.size(); }
  void clear();

  /// Reverse sweep seeded with d(output)/d(output) = 1. Returns the adjoint of
  /// every node recorded so far.
  std::vector<double> adjoints(int output) const;
  /// Same as adjoints() but writes into a caller-owned buffer (resized).
  void adjoints(int output, std::vector<double>& adj) const;

 private:
  std::vector<int> first_edge_;
  std::vector<int> edge_count_;
  std::vector<Edge> edges_;
};

/// Traced scalar. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT(google-explicit-constructor): constants mix freely
  Var(Tape* tape, int id, double v) : tape_(tape), id_(id), value_(v) {}

  static Var independent(Tape& tape, double v) { return Var(&tape, tape.leaf(), v); }

  double value() const { return value_; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return tape_ == nullptr; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
  double value_ = 0.0;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
/// |a|; the derivative at a == 0 is taken as 0.
Var abs(const Var& a);
/// Subgradient goes to `a` when a >= b (ties favour the first argument).
Var max(const Var& a, const Var& b);
/// Subgradient goes to `a` when a <= b (ties favour the first argument).
Var min(const Var& a, const Var& b);
Var pow(const Var& a, double p);
Var pow(const Var& a, const Var& p);

/// Records a node with an arbitrary number of parents. Used for composite
/// primitives whose partials are known in closed form.
Var custom(double value, std::span<const Var> inputs, std::span<const double> partials,
           const char* name);

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

/// Flat ordered list of trainable scalars with segment offsets.
/// segments[k] is the start of segment k; the last entry equals values.size().
struct ParamVector {
  std::vector<double> values;
  std::vector<std::size_t> segments;

  std::size_t size() const { return values.size(); }
  std::span<const double> segment(std::size_t k) const {
    return std::span<const double>(values).subspan(segments[k], segments[k + 1] - segments[k]);
  }
};

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Value and gradient of a scalar function of a parameter vector.
/// `f` receives traced parameters and returns a traced scalar.
template <class F>
ValueAndGradient grad_params(F&& f, std::span<const double> theta) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(theta.size());
  for (double t : theta) vars.push_back(Var::independent(tape, t));
  Var out = f(std::span<const Var>(vars));
  ValueAndGradient r;
  r.value = out.value();
  r.gradient.assign(theta.size(), 0.0);
  if (out.is_constant()) return r;
  const auto adj = tape.adjoints(out.id());
  for (std::size_t i = 0; i < vars.size(); ++i) r.gradient[i] = adj[vars[i].id()];
  return r;
}

/// A vector field R^in -> R^out evaluated on traced scalars.
struct FieldMap {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::function<std::vector<Var>(std::span<const Var>)> eval;
};

/// Exact Jacobian d(outputs)/d(inputs) of `f` at `x` (rows = outputs).
Eigen::MatrixXd input_jacobian(const FieldMap& f, std::span<const double> x);

}  // namespace pfpinn::ad
