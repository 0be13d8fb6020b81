#include "pfpinn/autodiff.hpp"

#include <cassert>
#include <sstream>

namespace pfpinn::ad {

namespace {

std::string describe(const std::string& primitive, std::initializer_list<double> operands) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite result in '" << primitive << "' with operands (";
  bool first = true;
  for (double v : operands) {
    os << (first ? "" : ", ") << v;
    first = false;
  }
  os << ")";
  return os.str();
}

inline bool finite(double v) { return std::isfinite(v); }

// Result of a unary primitive with local derivative `d`.
Var unary(const char* name, const Var& a, double v, double d) {
  if (!finite(v) || (!a.is_constant() && !finite(d))) throw NonFiniteError(name, {a.value()});
  if (a.is_constant()) return Var(v);
  return Var(a.tape(), a.tape()->record(a.id(), d), v);
}

Var binary(const char* name, const Var& a, const Var& b, double v, double da, double db) {
  const bool ca = a.is_constant();
  const bool cb = b.is_constant();
  if (!finite(v) || (!ca && !finite(da)) || (!cb && !finite(db)))
    throw NonFiniteError(name, {a.value(), b.value()});
  if (ca && cb) return Var(v);
  if (ca) return Var(b.tape(), b.tape()->record(b.id(), db), v);
  if (cb) return Var(a.tape(), a.tape()->record(a.id(), da), v);
  assert(a.tape() == b.tape());
  return Var(a.tape(), a.tape()->record(a.id(), da, b.id(), db), v);
}

}  // namespace

NonFiniteError::NonFiniteError(const std::string& primitive, std::initializer_list<double> operands)
    : std::runtime_error(describe(primitive, operands)) {}

int Tape::leaf() {
  first_edge_.push_back(static_cast<int>(edges_.size()));
  edge_count_.push_back(0);
  return static_cast<int>(first_edge_.size()) - 1;
}

int Tape::record(std::span<const Edge> edges) {
  first_edge_.push_back(static_cast<int>(edges_.size()));
  edge_count_.push_back(static_cast<int>(edges.size()));
  edges_.insert(edges_.end(), edges.begin(), edges.end());
  return static_cast<int>(first_edge_.size()) - 1;
}

int Tape::record(int a, double da) {
  first_edge_.push_back(static_cast<int>(edges_.size()));
  edge_count_.push_back(1);
  edges_.push_back({a, da});
  return static_cast<int>(first_edge_.size()) - 1;
}

int Tape::record(int a, double da, int b, double db) {
  first_edge_.push_back(static_cast<int>(edges_.size()));
  edge_count_.push_back(2);
  edges_.push_back({a, da});
  edges_.push_back({b, db});
  return static_cast<int>(first_edge_.size()) - 1;
}

void Tape::clear() {
  first_edge_.clear();
  edge_count_.clear();
  edges_.clear();
}

std::vector<double> Tape::adjoints(int output) const {
  std::vector<double> adj;
  adjoints(output, adj);
  return adj;
}

void Tape::adjoints(int output, std::vector<double>& adj) const {
  adj.assign(size(), 0.0);
  if (output < 0) return;
  adj[output] = 1.0;
  for (int n = output; n >= 0; --n) {
    const double a = adj[n];
    if (a == 0.0) continue;
    const int begin = first_edge_[n];
    const int end = begin + edge_count_[n];
    for (int e = begin; e < end; ++e) adj[edges_[e].parent] += a * edges_[e].partial;
  }
}

Var& Var::operator+=(const Var& o) { return *this = *this + o; }
Var& Var::operator-=(const Var& o) { return *this = *this - o; }
Var& Var::operator*=(const Var& o) { return *this = *this * o; }
Var& Var::operator/=(const Var& o) { return *this = *this / o; }

Var operator+(const Var& a, const Var& b) {
  return binary("add", a, b, a.value() + b.value(), 1.0, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  return binary("sub", a, b, a.value() - b.value(), 1.0, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  return binary("mul", a, b, a.value() * b.value(), b.value(), a.value());
}

Var operator/(const Var& a, const Var& b) {
  const double v = a.value() / b.value();
  return binary("div", a, b, v, 1.0 / b.value(), -v / b.value());
}

Var operator-(const Var& a) { return unary("neg", a, -a.value(), -1.0); }

Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return unary("tanh", a, t, 1.0 - t * t);
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary("exp", a, e, e);
}

Var log(const Var& a) { return unary("log", a, std::log(a.value()), 1.0 / a.value()); }

Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return unary("sqrt", a, s, 0.5 / s);
}

Var abs(const Var& a) {
  const double x = a.value();
  return unary("abs", a, std::abs(x), x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
}

Var max(const Var& a, const Var& b) {
  const bool first = a.value() >= b.value();
  return binary("max", a, b, first ? a.value() : b.value(), first ? 1.0 : 0.0, first ? 0.0 : 1.0);
}

Var min(const Var& a, const Var& b) {
  const bool first = a.value() <= b.value();
  return binary("min", a, b, first ? a.value() : b.value(), first ? 1.0 : 0.0, first ? 0.0 : 1.0);
}

Var pow(const Var& a, double p) {
  const double x = a.value();
  const double v = std::pow(x, p);
  // p * x^(p-1), written so that x == 0 with p >= 1 stays finite.
  const double d = p == 0.0 ? 0.0 : p * std::pow(x, p - 1.0);
  return unary("pow", a, v, d);
}

Var pow(const Var& a, const Var& p) {
  const double x = a.value();
  const double v = std::pow(x, p.value());
  const double da = p.value() == 0.0 ? 0.0 : p.value() * std::pow(x, p.value() - 1.0);
  const double dp = p.is_constant() ? 0.0 : v * std::log(x);
  return binary("pow", a, p, v, da, dp);
}

Var custom(double value, std::span<const Var> inputs, std::span<const double> partials,
           const char* name) {
  assert(inputs.size() == partials.size());
  if (!finite(value)) throw NonFiniteError(name, {value});
  Tape* tape = nullptr;
  std::vector<Tape::Edge> edges;
  edges.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].is_constant()) continue;
    if (!finite(partials[i])) throw NonFiniteError(name, {inputs[i].value(), partials[i]});
    tape = inputs[i].tape();
    edges.push_back({inputs[i].id(), partials[i]});
  }
  if (tape == nullptr) return Var(value);
  return Var(tape, tape->record(edges), value);
}

Eigen::MatrixXd input_jacobian(const FieldMap& f, std::span<const double> x) {
  if (x.size() != f.in_dim)
    throw std::invalid_argument("input_jacobian: point has dimension " + std::to_string(x.size()) +
                                ", field expects " + std::to_string(f.in_dim));
  Tape tape;
  std::vector<Var> in;
  in.reserve(x.size());
  for (double v : x) in.push_back(Var::independent(tape, v));
  const std::vector<Var> out = f.eval(in);
  if (out.size() != f.out_dim)
    throw std::invalid_argument("input_jacobian: field returned " + std::to_string(out.size()) +
                                " outputs, expected " + std::to_string(f.out_dim));
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.size()),
                                            static_cast<Eigen::Index>(x.size()));
  std::vector<double> adj;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (out[r].is_constant()) continue;
    tape.adjoints(out[r].id(), adj);
    for (std::size_t c = 0; c < in.size(); ++c)
      J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = adj[in[c].id()];
  }
  return J;
}

}  // namespace pfpinn::ad
