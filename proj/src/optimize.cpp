#include "pfpinn/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pfpinn::optimize {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void AdamState::step(std::span<double> x, std::span<const double> g) {
  ++t;
  const double b1t = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double b2t = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double mhat = m[i] / b1t;
    const double vhat = v[i] / b2t;
    x[i] -= config.alpha * mhat / (std::sqrt(vhat) + config.eps);
  }
}

AdamResult adam_run(const Objective& f, std::vector<double> x0, int iters, const AdamConfig& config) {
  if (iters < 0) throw std::invalid_argument("adam_run: iters must be >= 0");
  AdamResult res;
  res.x = std::move(x0);
  res.trace.reserve(static_cast<std::size_t>(iters) + 1);
  AdamState state(res.x.size(), config);
  std::vector<double> g(res.x.size());
  std::vector<double> last = res.x;
  for (int k = 0; k <= iters; ++k) {
    const double fx = f(res.x, g);
    if (!std::isfinite(fx) || !all_finite(g))
      throw OptimizerAbort("adam: non-finite loss at iteration " + std::to_string(k), res.trace, last);
    res.trace.push_back(fx);
    if (k == iters) break;
    last = res.x;
    state.step(res.x, g);
  }
  return res;
}

std::string to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max-iterations";
    case LbfgsStatus::FunctionTolerance: return "function-tolerance";
    case LbfgsStatus::LineSearchFailed: return "line-search-failed";
  }
  return "unknown";
}

bool LbfgsMemory::push(std::vector<double> s, std::vector<double> y) {
  const double sy = dot(s, y);
  if (!(sy > 1e-12 * norm2(s) * norm2(y))) return false;
  if (capacity_ <= 0) return false;
  if (static_cast<int>(pairs_.size()) == capacity_) pairs_.pop_front();
  pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
  return true;
}

std::vector<double> LbfgsMemory::direction(std::span<const double> g) const {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(pairs_.size());
  for (std::size_t k = pairs_.size(); k-- > 0;) {
    const Pair& p = pairs_[k];
    alpha[k] = p.rho * dot(p.s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * p.y[i];
  }
  if (!pairs_.empty()) {
    const Pair& p = pairs_.back();
    const double gamma = dot(p.s, p.y) / dot(p.y, p.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const Pair& p = pairs_[k];
    const double beta = p.rho * dot(p.y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * p.s[i];
  }
  for (double& v : q) v = -v;
  return q;
}

namespace {

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;  // directional derivative
  std::vector<double> x, g;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the safeguarded interior of [a, b]; bisection when degenerate.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(disc)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b - (b - a) * (db + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(t, lo + margin, hi - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, std::span<const double> x, std::span<const double> d, double f0, double dphi0,
             const LbfgsConfig& cfg, int& evals)
      : f_(f), x_(x), d_(d), f0_(f0), dphi0_(dphi0), cfg_(cfg), evals_(evals) {}

  // Strong Wolfe search starting from alpha0. Returns false on failure; `best`
  // then holds the lowest finite point seen (possibly none).
  bool run(double alpha0, Probe& out) {
    Probe prev;
    prev.alpha = 0.0;
    prev.f = f0_;
    prev.dphi = dphi0_;
    double alpha = alpha0;
    for (int i = 0; i < cfg_.max_linesearch; ++i) {
      Probe cur = probe(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + cfg_.c1 * alpha * dphi0_ || (i > 0 && cur.f >= prev.f))
        return zoom(prev, cur, out);
      if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.dphi >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return false;
  }

  Probe best;

 private:
  Probe probe(double alpha) {
    Probe p;
    p.alpha = alpha;
    p.x.resize(x_.size());
    p.g.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) p.x[i] = x_[i] + alpha * d_[i];
    p.f = f_(p.x, p.g);
    ++evals_;
    if (!all_finite(p.g)) p.f = std::numeric_limits<double>::quiet_NaN();
    p.dphi = std::isfinite(p.f) ? dot(p.g, d_) : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(p.f) && p.f < f0_ && (best.x.empty() || p.f < best.f)) best = p;
    return p;
  }

  bool zoom(Probe lo, Probe hi, Probe& out) {
    for (int i = 0; i < cfg_.max_linesearch; ++i) {
      double alpha;
      if (std::isfinite(hi.f) && std::isfinite(hi.dphi))
        alpha = cubic_step(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
      else
        alpha = 0.5 * (lo.alpha + hi.alpha);
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) return false;
      Probe cur = probe(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + cfg_.c1 * alpha * dphi0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return false;
  }

  const Objective& f_;
  std::span<const double> x_, d_;
  double f0_, dphi0_;
  const LbfgsConfig& cfg_;
  int& evals_;
};

}  // namespace

LbfgsResult lbfgs_run(const Objective& f, std::vector<double> x0, int max_iters, const LbfgsConfig& config) {
  if (max_iters < 0) throw std::invalid_argument("lbfgs_run: max_iters must be >= 0");
  LbfgsResult res;
  res.memory = LbfgsMemory(config.memory);
  res.x = std::move(x0);
  std::vector<double> g(res.x.size(), 0.0);
  double fx = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(fx) || !all_finite(g)) throw OptimizerAbort("lbfgs: non-finite loss at the start", {}, res.x);
  res.trace.push_back(fx);

  if (norm_inf(g) <= config.grad_tol) {
    res.status = LbfgsStatus::Converged;
    return res;
  }
  res.status = LbfgsStatus::MaxIterations;
  while (res.iterations < max_iters) {
    std::vector<double> d = res.memory.direction(g);
    double dphi0 = dot(g, d);
    if (!(dphi0 < 0.0)) {
      res.memory.clear();
      d = res.memory.direction(g);
      dphi0 = dot(g, d);
    }
    const double alpha0 = res.memory.size() == 0 ? std::min(1.0, 1.0 / norm2(g)) : 1.0;

    LineSearch ls(f, res.x, d, fx, dphi0, config, res.evaluations);
    Probe next;
    bool ok = ls.run(alpha0, next);
    if (!ok) {
      // Accept the best sufficient-decrease point if one was seen, else stop.
      if (!ls.best.x.empty() && ls.best.f <= fx + config.c1 * ls.best.alpha * dphi0) {
        next = ls.best;
      } else {
        res.status = LbfgsStatus::LineSearchFailed;
        break;
      }
    }
    if (!(next.f < fx)) {
      res.status = LbfgsStatus::LineSearchFailed;
      break;
    }
    std::vector<double> s(res.x.size()), y(res.x.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next.x[i] - res.x[i];
      y[i] = next.g[i] - g[i];
    }
    res.memory.push(std::move(s), std::move(y));
    const double f_prev = fx;
    res.x = std::move(next.x);
    g = std::move(next.g);
    fx = next.f;
    ++res.iterations;
    res.trace.push_back(fx);

    if (norm_inf(g) <= config.grad_tol) {
      res.status = LbfgsStatus::Converged;
      break;
    }
    if (config.f_tol > 0.0 &&
        (f_prev - fx) <= config.f_tol * std::max(std::abs(f_prev), std::abs(fx))) {
      res.status = LbfgsStatus::FunctionTolerance;
      break;
    }
  }
  return res;
}

}  // namespace pfpinn::optimize
