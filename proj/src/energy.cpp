#include "pfpinn/energy.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pfpinn::solver {

HistoryPolicy history_policy_from_name(const std::string& name) {
  if (name == "live") return HistoryPolicy::Live;
  if (name == "frozen") return HistoryPolicy::Frozen;
  throw InputError("history policy must be 'live' or 'frozen', got '" + name + "'");
}

std::string history_policy_name(HistoryPolicy p) { return p == HistoryPolicy::Live ? "live" : "frozen"; }

PointTerms point_energy(const PointFields& p, const PointContext& ctx) {
  const int d = p.dim;
  const auto& mat = *ctx.mat;
  Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) eps(i, j) = 0.5 * (p.DF[i][j] + p.DF[j][i]);
  const fracture::SplitWithStress s = fracture::split_with_stress(eps, d, mat, ctx.split);

  PointTerms t;
  t.psi_plus = s.psi.plus;
  double work = 0.0;
  for (int i = 0; i < d; ++i) {
    work += ctx.body[i] * p.F[i];
    t.Fbar[i] = -ctx.body[i];
  }
  Eigen::Matrix3d sigma;
  if (!ctx.crack) {
    t.elastic = s.psi.plus + s.psi.minus;
    t.value = t.elastic - work;
    sigma = s.dplus + s.dminus;
  } else {
    const double phi = p.F[d];
    const double g = (1.0 - phi) * (1.0 - phi);
    const bool live_branch = ctx.policy == HistoryPolicy::Live && s.psi.plus > ctx.H_prev;
    const double H = live_branch ? s.psi.plus : ctx.H_prev;
    const double c = mat.Gc / (2.0 * mat.l0);
    double g2 = 0.0;
    for (int k = 0; k < d; ++k) g2 += p.DF[d][k] * p.DF[d][k];
    t.elastic = g * s.psi.plus + s.psi.minus;
    t.fracture = c * (phi * phi + mat.l0 * mat.l0 * g2) + g * H;
    t.value = t.elastic + t.fracture - work;
    sigma = (live_branch ? 2.0 * g : g) * s.dplus + s.dminus;
    t.Fbar[d] = -2.0 * (1.0 - phi) * (s.psi.plus + H) + 2.0 * c * phi;
    for (int k = 0; k < d; ++k) t.DFbar[d][k] = 2.0 * c * mat.l0 * mat.l0 * p.DF[d][k];
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t.DFbar[i][j] = sigma(i, j);
  return t;
}

CoefficientTable coefficient_table(const network::OutputTransform& t, std::span<const Point> points) {
  const int nf = t.num_fields();
  const int d = t.dim;
  const auto P = static_cast<Eigen::Index>(points.size());
  CoefficientTable c;
  c.A1 = Eigen::MatrixXd::Zero(nf, P);
  c.B = Eigen::MatrixXd::Zero(nf, P);
  c.dA1.assign(d, Eigen::MatrixXd::Zero(nf, P));
  c.dB.assign(d, Eigen::MatrixXd::Zero(nf, P));
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto k0 = network::transform_coefficients(t, points[p], 0.0);
    const auto k1 = network::transform_coefficients(t, points[p], 1.0);
    for (int i = 0; i < nf; ++i) {
      if (k0.A[i] != 0.0) throw std::logic_error("transform particular part is not linear in the load");
      c.A1(i, p) = k1.A[i];
      c.B(i, p) = k1.B[i];
      for (int k = 0; k < d; ++k) {
        c.dA1[k](i, p) = k1.dA[i][k];
        c.dB[k](i, p) = k1.dB[i][k];
      }
    }
  }
  return c;
}

namespace {

Eigen::MatrixXd to_matrix(std::span<const Point> points, int d) {
  Eigen::MatrixXd X(d, static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p)
    for (int k = 0; k < d; ++k) X(k, static_cast<Eigen::Index>(p)) = points[p][k];
  return X;
}

void combine(const CoefficientTable& c, const network::BatchTrace& tr, double load, FieldBlock& out) {
  const int d = tr.dim;
  out.dim = d;
  out.F = load * c.A1 + (c.B.array() * tr.out.array()).matrix();
  out.DF.resize(d);
  for (int k = 0; k < d; ++k)
    out.DF[k] = load * c.dA1[k] + (c.dB[k].array() * tr.out.array() + c.B.array() * tr.dout[k].array()).matrix();
}

}  // namespace

FieldBlock evaluate_fields(const network::MlpParams& params, const network::OutputTransform& t, double load,
                           std::span<const Point> points) {
  const int d = t.dim;
  FieldBlock out;
  out.dim = d;
  out.F.resize(t.num_fields(), 0);
  out.DF.assign(d, Eigen::MatrixXd(t.num_fields(), 0));
  constexpr std::size_t kChunk = 4096;
  for (std::size_t b = 0; b < points.size(); b += kChunk) {
    const auto part = points.subspan(b, std::min(kChunk, points.size() - b));
    network::BatchTrace tr;
    network::batch_forward(params, to_matrix(part, d), tr);
    FieldBlock blk;
    combine(coefficient_table(t, part), tr, load, blk);
    const auto n0 = out.F.cols();
    out.F.conservativeResize(Eigen::NoChange, n0 + blk.F.cols());
    out.F.rightCols(blk.F.cols()) = blk.F;
    for (int k = 0; k < d; ++k) {
      out.DF[k].conservativeResize(Eigen::NoChange, n0 + blk.F.cols());
      out.DF[k].rightCols(blk.F.cols()) = blk.DF[k];
    }
  }
  return out;
}

EnergyAssembler::EnergyAssembler(const Problem& problem, const fracture::Material& mat,
                                 const quadrature::GaussCloud& cloud, const network::MlpArchitecture& arch,
                                 EnergyOptions opts)
    : problem_(&problem), mat_(&mat), arch_(arch), opts_(opts), n_points_(cloud.size()) {
  if (opts_.chunk < 1) throw InputError("chunk size must be positive");
  if (opts_.threads < 1) throw InputError("threads must be >= 1");
  arch_.validate_for_dimension(problem.dim);
  const int d = problem.dim;
  body_.assign(n_points_, Point{0.0, 0.0, 0.0});
  crack_.assign(n_points_, 1);
  for (std::size_t p = 0; p < n_points_; ++p) {
    if (problem.body_force) body_[p] = problem.body_force(cloud.points[p]);
    for (const auto& box : problem.elastic_boxes)
      if (box.contains(cloud.points[p], d)) crack_[p] = 0;
  }
  H_.assign(n_points_, 0.0);
  for (std::size_t b = 0; b < n_points_; b += static_cast<std::size_t>(opts_.chunk)) {
    Chunk c;
    c.begin = b;
    c.end = std::min(n_points_, b + static_cast<std::size_t>(opts_.chunk));
    const auto pts = std::span<const Point>(cloud.points).subspan(c.begin, c.end - c.begin);
    c.X = to_matrix(pts, d);
    c.coef = coefficient_table(problem.transform, pts);
    c.w = Eigen::Map<const Eigen::VectorXd>(cloud.weights.data() + c.begin,
                                            static_cast<Eigen::Index>(c.end - c.begin));
    chunks_.push_back(std::move(c));
  }
}

void EnergyAssembler::set_history(std::span<const double> H_prev) {
  if (H_prev.size() != n_points_) throw std::invalid_argument("set_history: size mismatch with the cloud");
  H_.assign(H_prev.begin(), H_prev.end());
}

void EnergyAssembler::freeze_below(int first_layer, const network::MlpParams& params) {
  if (first_layer < 0 || first_layer >= arch_.num_layers()) throw std::invalid_argument("freeze_below: bad layer");
  first_layer_ = first_layer;
  for_chunks([&](Chunk& c, std::size_t) {
    if (first_layer_ > 0) network::batch_forward(params, c.X, c.trace, 0);
    c.cached = first_layer_ > 0;
  });
}

template <class Body>
void EnergyAssembler::for_chunks(Body&& body) {
  const std::size_t n = chunks_.size();
  const int threads = std::min<int>(opts_.threads, static_cast<int>(n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(chunks_[i], i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) body(chunks_[i], i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

EnergyValue EnergyAssembler::evaluate(const network::MlpParams& params, network::MlpParams* grad) {
  const int d = problem_->dim;
  const int nf = d + 1;
  std::vector<EnergyValue> partial(chunks_.size());
  std::vector<network::MlpParams> grads;
  if (grad) grads.assign(chunks_.size(), network::zeros(arch_));

  for_chunks([&](Chunk& c, std::size_t ci) {
    network::batch_forward(params, c.X, c.trace, c.cached ? first_layer_ : 0);
    FieldBlock fb;
    combine(c.coef, c.trace, load_, fb);
    const auto P = static_cast<Eigen::Index>(c.end - c.begin);
    Eigen::MatrixXd Fbar, out_bar;
    std::vector<Eigen::MatrixXd> DFbar;
    if (grad) {
      Fbar.resize(nf, P);
      DFbar.assign(d, Eigen::MatrixXd(nf, P));
    }
    PointContext ctx;
    ctx.mat = mat_;
    ctx.split = problem_->split;
    ctx.policy = opts_.policy;
    EnergyValue acc;
    for (Eigen::Index p = 0; p < P; ++p) {
      const std::size_t gi = c.begin + static_cast<std::size_t>(p);
      PointFields pf;
      pf.dim = d;
      for (int i = 0; i < nf; ++i) {
        pf.F[i] = fb.F(i, p);
        for (int k = 0; k < d; ++k) pf.DF[i][k] = fb.DF[k](i, p);
      }
      ctx.crack = crack_[gi] != 0;
      ctx.H_prev = H_[gi];
      ctx.body = body_[gi];
      if (!ctx.crack) {
        pf.F[d] = 0.0;
        pf.DF[d] = {0.0, 0.0, 0.0};
      }
      const PointTerms t = point_energy(pf, ctx);
      if (!std::isfinite(t.value)) {
        std::ostringstream os;
        os << "non-finite energy density at point (";
        for (int k = 0; k < d; ++k) os << (k ? ", " : "") << c.X(k, p);
        os << ")";
        throw std::domain_error(os.str());
      }
      const double w = c.w(p);
      acc.total += w * t.value;
      acc.elastic += w * t.elastic;
      acc.fracture += w * t.fracture;
      if (grad) {
        for (int i = 0; i < nf; ++i) {
          Fbar(i, p) = w * t.Fbar[i];
          for (int k = 0; k < d; ++k) DFbar[k](i, p) = w * t.DFbar[i][k];
        }
        if (!ctx.crack) {
          Fbar(d, p) = 0.0;
          for (int k = 0; k < d; ++k) DFbar[k](d, p) = 0.0;
        }
      }
    }
    partial[ci] = acc;
    if (grad) {
      // field = load A1 + B raw, grad field = load dA1 + dB raw + B grad raw
      out_bar = (c.coef.B.array() * Fbar.array()).matrix();
      std::vector<Eigen::MatrixXd> dout_bar(d);
      for (int k = 0; k < d; ++k) {
        out_bar.array() += c.coef.dB[k].array() * DFbar[k].array();
        dout_bar[k] = (c.coef.B.array() * DFbar[k].array()).matrix();
      }
      network::batch_backward(params, c.trace, out_bar, dout_bar, first_layer_, grads[ci]);
    }
  });

  EnergyValue total;
  for (const auto& v : partial) {
    total.total += v.total;
    total.elastic += v.elastic;
    total.fracture += v.fracture;
  }
  if (grad) {
    for (const auto& g : grads)
      for (int l = 0; l < arch_.num_layers(); ++l) {
        grad->weights[l] += g.weights[l];
        grad->biases[l] += g.biases[l];
      }
  }
  return total;
}

std::vector<double> EnergyAssembler::psi_plus(const network::MlpParams& params) {
  const int d = problem_->dim;
  std::vector<double> out(n_points_, 0.0);
  for_chunks([&](Chunk& c, std::size_t) {
    network::BatchTrace tr;
    network::batch_forward(params, c.X, tr, 0);
    FieldBlock fb;
    combine(c.coef, tr, load_, fb);
    for (std::size_t p = c.begin; p < c.end; ++p) {
      if (!crack_[p]) continue;
      const auto col = static_cast<Eigen::Index>(p - c.begin);
      Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) eps(i, j) = 0.5 * (fb.DF[j](i, col) + fb.DF[i](j, col));
      out[p] = fracture::split_with_stress(eps, d, *mat_, problem_->split).psi.plus;
    }
  });
  return out;
}

}  // namespace pfpinn::solver
