#include "pfpinn/checks.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "pfpinn/autodiff.hpp"
#include "pfpinn/energy.hpp"
#include "pfpinn/fracture.hpp"
#include "pfpinn/network.hpp"
#include "pfpinn/problem.hpp"
#include "pfpinn/quadrature.hpp"

namespace pfpinn::checks {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kRelTol = 1e-5;
constexpr double kAbsTol = 1e-8;

bool close(double a, double b) { return std::abs(a - b) <= kAbsTol || std::abs(a - b) <= kRelTol * std::abs(b); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Worst violation of the mixed tolerance, as max over entries of |a-b| / max(abs_tol, rel_tol |b|).
double violation(double a, double b) { return std::abs(a - b) / std::max(kAbsTol, kRelTol * std::abs(b)); }

using ScalarFn = std::function<ad::Var(std::span<const ad::Var>)>;

CheckResult primitive(const std::string& name, const ScalarFn& f, std::vector<double> x) {
  const auto vg = ad::grad_params(f, x);
  double worst = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += kFdStep;
    xm[i] -= kFdStep;
    auto eval = [&](const std::vector<double>& v) {
      std::vector<ad::Var> c(v.begin(), v.end());
      return f(c).value();
    };
    const double fd = (eval(xp) - eval(xm)) / (2.0 * kFdStep);
    ok = ok && close(vg.gradient[i], fd);
    worst = std::max(worst, violation(vg.gradient[i], fd));
  }
  return {"ad." + name, ok, "worst scaled error " + fmt(worst)};
}

}  // namespace

std::vector<CheckResult> check_ad(std::uint64_t seed) {
  using ad::Var;
  std::vector<CheckResult> out;
  out.push_back(primitive("add", [](auto v) { return v[0] + v[1]; }, {0.3, -1.7}));
  out.push_back(primitive("sub", [](auto v) { return v[0] - v[1]; }, {0.3, -1.7}));
  out.push_back(primitive("mul", [](auto v) { return v[0] * v[1]; }, {0.3, -1.7}));
  out.push_back(primitive("div", [](auto v) { return v[0] / v[1]; }, {0.3, -1.7}));
  out.push_back(primitive("neg", [](auto v) { return -v[0]; }, {0.8}));
  out.push_back(primitive("tanh", [](auto v) { return ad::tanh(v[0]); }, {0.4}));
  out.push_back(primitive("exp", [](auto v) { return ad::exp(v[0]); }, {0.4}));
  out.push_back(primitive("log", [](auto v) { return ad::log(v[0]); }, {1.3}));
  out.push_back(primitive("sqrt", [](auto v) { return ad::sqrt(v[0]); }, {1.3}));
  out.push_back(primitive("abs", [](auto v) { return ad::abs(v[0]); }, {-0.6}));
  out.push_back(primitive("max", [](auto v) { return ad::max(v[0], v[1]); }, {0.2, 0.9}));
  out.push_back(primitive("min", [](auto v) { return ad::min(v[0], v[1]); }, {0.2, 0.9}));
  out.push_back(primitive("pow_const", [](auto v) { return ad::pow(v[0], 2.5); }, {1.4}));
  out.push_back(primitive("pow_var", [](auto v) { return ad::pow(v[0], v[1]); }, {1.4, 0.7}));
  out.push_back(primitive("composite", [](auto v) { return ad::tanh(v[0] * v[1]) / (1.0 + ad::exp(v[2])); },
                          {0.5, -0.3, 0.2}));
  const fracture::Material mat{1.3, 0.9, 1.0, 1.0};
  for (int d = 1; d <= 3; ++d) {
    std::vector<double> e{0.3, -0.2, 0.15, 0.1, -0.05, 0.25};
    e.resize(fracture::packed_size(d));
    out.push_back(primitive("split_plus_" + std::to_string(d) + "d",
                            [&, d](auto v) { return fracture::split_energy(v, d, mat, fracture::SplitMode::Spectral).first; },
                            e));
    out.push_back(primitive("split_minus_" + std::to_string(d) + "d",
                            [&, d](auto v) { return fracture::split_energy(v, d, mat, fracture::SplitMode::Spectral).second; },
                            e));
  }

  // Random networks with 3 weight layers: parameter gradients by the tape and by
  // the batched engine, input Jacobians by both, all against central differences.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(1, 3), width_dist(3, 8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int fails_tape = 0, fails_batch = 0, fails_jac = 0;
  double worst_tape = 0.0, worst_batch = 0.0, worst_jac = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim_dist(rng);
    network::MlpArchitecture arch{{d, width_dist(rng), width_dist(rng), d + 1}};
    const network::MlpParams params = network::init_xavier(arch, rng());
    const std::vector<double> theta = network::flatten(params).values;
    const int P = 3;
    Eigen::MatrixXd X(d, P), out_bar(d + 1, P);
    std::vector<Eigen::MatrixXd> dout_bar(d, Eigen::MatrixXd(d + 1, P));
    for (int p = 0; p < P; ++p) {
      for (int k = 0; k < d; ++k) X(k, p) = U(rng);
      for (int i = 0; i <= d; ++i) {
        out_bar(i, p) = U(rng);
        for (int k = 0; k < d; ++k) dout_bar[k](i, p) = U(rng);
      }
    }
    // J(theta) = sum out_bar .* out + sum_k dout_bar_k .* dout_k
    auto J_batch = [&](const std::vector<double>& th) {
      network::BatchTrace tr;
      network::batch_forward(network::unflatten(arch, th), X, tr);
      double s = (out_bar.array() * tr.out.array()).sum();
      for (int k = 0; k < d; ++k) s += (dout_bar[k].array() * tr.dout[k].array()).sum();
      return s;
    };
    // The tape route sees only the value part (no second derivatives on the tape).
    auto J_value = [&](std::span<const ad::Var> th) {
      Var s = 0.0;
      for (int p = 0; p < P; ++p) {
        std::vector<Var> x(d);
        for (int k = 0; k < d; ++k) x[k] = X(k, p);
        const auto o = network::forward_flat<Var, Var>(arch, th, x);
        for (int i = 0; i <= d; ++i) s = s + out_bar(i, p) * o[i];
      }
      return s;
    };
    const auto tape_grad = ad::grad_params(J_value, theta).gradient;
    network::MlpParams g = network::zeros(arch);
    {
      network::BatchTrace tr;
      network::batch_forward(params, X, tr);
      network::batch_backward(params, tr, out_bar, dout_bar, 0, g);
    }
    const std::vector<double> batch_grad = network::flatten(g).values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto tp = theta, tm = theta;
      tp[i] += kFdStep;
      tm[i] -= kFdStep;
      const double fd_full = (J_batch(tp) - J_batch(tm)) / (2.0 * kFdStep);
      auto value_only = [&](const std::vector<double>& th) {
        std::vector<Var> c(th.begin(), th.end());
        return J_value(c).value();
      };
      const double fd_value = (value_only(tp) - value_only(tm)) / (2.0 * kFdStep);
      if (!close(tape_grad[i], fd_value)) ++fails_tape;
      if (!close(batch_grad[i], fd_full)) ++fails_batch;
      worst_tape = std::max(worst_tape, violation(tape_grad[i], fd_value));
      worst_batch = std::max(worst_batch, violation(batch_grad[i], fd_full));
    }
    // Input Jacobian at the first point: tape route and batched tangents.
    std::vector<double> x0(d);
    for (int k = 0; k < d; ++k) x0[k] = X(k, 0);
    ad::FieldMap fm{static_cast<std::size_t>(d), static_cast<std::size_t>(d + 1),
                    [&](std::span<const Var> x) { return network::forward<Var>(params, x); }};
    const Eigen::MatrixXd Jt = ad::input_jacobian(fm, x0);
    network::BatchTrace tr;
    network::batch_forward(params, X.col(0), tr);
    for (int k = 0; k < d; ++k) {
      auto xp = x0, xm = x0;
      xp[k] += kFdStep;
      xm[k] -= kFdStep;
      const auto fp = network::forward<double>(params, xp);
      const auto fm_ = network::forward<double>(params, xm);
      for (int i = 0; i <= d; ++i) {
        const double fd = (fp[i] - fm_[i]) / (2.0 * kFdStep);
        if (!close(Jt(i, k), fd) || !close(tr.dout[k](i, 0), fd)) ++fails_jac;
        worst_jac = std::max({worst_jac, violation(Jt(i, k), fd), violation(tr.dout[k](i, 0), fd)});
      }
    }
  }
  out.push_back({"ad.networks.param_grad.tape", fails_tape == 0,
                 std::to_string(fails_tape) + " mismatches, worst scaled error " + fmt(worst_tape)});
  out.push_back({"ad.networks.param_grad.batched", fails_batch == 0,
                 std::to_string(fails_batch) + " mismatches, worst scaled error " + fmt(worst_batch)});
  out.push_back({"ad.networks.input_jacobian", fails_jac == 0,
                 std::to_string(fails_jac) + " mismatches, worst scaled error " + fmt(worst_jac)});
  return out;
}

std::vector<CheckResult> check_quadrature() {
  std::vector<CheckResult> out;
  for (int n = 1; n <= 16; ++n) {
    const auto rule = quadrature::gauss_legendre_1d(n);
    double worst = 0.0;
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
      worst = std::max(worst, std::abs(s - exact));
    }
    out.push_back({"quadrature.gauss_exactness.n" + std::to_string(n), worst <= 1e-13, "max error " + fmt(worst)});
  }
  {
    const auto patch = geometry::quarter_disc_patch(1.0);
    auto mesh = geometry::ElementMesh::from_knot_spans(0, patch);
    mesh = geometry::refine_region(mesh, [](const geometry::Cell&) { return true; }, 3);
    const auto cloud = quadrature::build_cloud(mesh, patch, 6);
    const std::vector<double> ones(cloud.size(), 1.0);
    const double err = std::abs(quadrature::integrate(ones, cloud) - std::numbers::pi / 4.0);
    out.push_back({"quadrature.quarter_disc_area", err <= 1e-6, "|area - pi/4| = " + fmt(err)});
  }
  {
    const auto problem = solver::make_problem("senp-tension", solver::default_material("senp-tension"));
    const auto cloud = quadrature::build_cloud(problem.mesh, problem.patches, 8);
    out.push_back({"quadrature.senp_point_count", cloud.size() == 61440 && problem.mesh.size() == 960,
                   std::to_string(problem.mesh.size()) + " cells, " + std::to_string(cloud.size()) + " points"});
  }
  return out;
}

std::vector<CheckResult> check_split(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0), M(0.1, 2.0);
  for (int d = 1; d <= 3; ++d) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const fracture::Material mat{M(rng), M(rng), 1.0, 1.0};
      Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) e(i, j) = e(j, i) = U(rng);
      const auto ev = fracture::symmetric_eigenvalues(e, d);
      const auto s = fracture::psi_split(std::span<const double>(ev.data(), d), mat);
      worst = std::max(worst, std::abs(s.plus + s.minus - fracture::undecomposed_energy(e, d, mat)));
    }
    out.push_back({"split.identity." + std::to_string(d) + "d", worst <= 1e-10, "max |psi+ + psi- - psi| = " + fmt(worst)});
  }
  for (int d = 2; d <= 3; ++d) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const fracture::Material mat{M(rng), M(rng), 1.0, 1.0};
      Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) e(i, j) = e(j, i) = U(rng);
      Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = U(rng);
      Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
      Q.topLeftCorner(d, d) = Eigen::MatrixXd(A.topLeftCorner(d, d)).householderQr().householderQ();
      const Eigen::Matrix3d r = Q * e * Q.transpose();
      const auto a = fracture::split_with_stress(e, d, mat, fracture::SplitMode::Spectral).psi;
      const auto b = fracture::split_with_stress(r, d, mat, fracture::SplitMode::Spectral).psi;
      worst = std::max({worst, std::abs(a.plus - b.plus), std::abs(a.minus - b.minus)});
    }
    out.push_back({"split.rotation_invariance." + std::to_string(d) + "d", worst <= 1e-10, "max change " + fmt(worst)});
  }
  return out;
}

std::vector<CheckResult> check_bc(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.5, 3.0), L(-1e-2, 1e-2);
  for (const auto& name : solver::preset_names()) {
    const auto problem = solver::make_problem(name, solver::default_material(name), 0);
    const int d = problem.dim;
    double worst = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
      network::MlpArchitecture arch{{d, 20, 20, 20, d + 1}};
      network::MlpParams params = network::init_xavier(arch, rng());
      const double s = scale(rng);
      for (auto& W : params.weights) W *= s;
      for (auto& b : params.biases) b.setConstant(0.3 * s);
      const double load = L(rng);
      const auto samples = solver::sample_dirichlet(problem, load, rng, 250);
      std::vector<Point> pts;
      for (const auto& smp : samples) pts.push_back(smp.x);
      const auto fb = solver::evaluate_fields(params, problem.transform, load, pts);
      for (std::size_t i = 0; i < samples.size(); ++i)
        worst = std::max(worst, std::abs(fb.F(samples[i].field, static_cast<Eigen::Index>(i)) - samples[i].value));
    }
    out.push_back({"bc." + name, worst <= 1e-12, "1000 samples, max |field - prescribed| = " + fmt(worst)});
  }
  return out;
}

std::vector<CheckResult> run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "ad") return check_ad(seed);
  if (name == "quadrature") return check_quadrature();
  if (name == "split") return check_split(seed);
  if (name == "bc") return check_bc(seed);
  throw InputError("unknown check suite '" + name + "' (expected ad, quadrature, split or bc)");
}

bool report(std::ostream& os, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  return all;
}

}  // namespace pfpinn::checks
