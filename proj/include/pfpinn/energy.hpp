#pragma once

// Discrete variational energy over a Gauss cloud and its parameter gradient.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfpinn/autodiff.hpp"
#include "pfpinn/fracture.hpp"
#include "pfpinn/network.hpp"
#include "pfpinn/problem.hpp"
#include "pfpinn/quadrature.hpp"

namespace pfpinn::solver {

enum class HistoryPolicy {
  Live,    // H = max(H_prev, Psi+) inside the energy
  Frozen,  // H = H_prev during the step
};
HistoryPolicy history_policy_from_name(const std::string& name);
std::string history_policy_name(HistoryPolicy p);

/// Everything the density at one point depends on besides the fields.
struct PointContext {
  const fracture::Material* mat = nullptr;
  fracture::SplitMode split = fracture::SplitMode::Spectral;
  HistoryPolicy policy = HistoryPolicy::Live;
  double H_prev = 0.0;
  bool crack = true;  // false inside elastic boxes
  Point body{};
};

/// Fields (u..., phi) and their spatial gradients at one point.
struct PointFields {
  int dim = 0;
  std::array<double, 4> F{};
  std::array<std::array<double, 3>, 4> DF{};
};

struct PointTerms {
  double value = 0.0;
  double elastic = 0.0;   // g Psi+ + Psi-
  double fracture = 0.0;  // Gc/(2 l0)(phi^2 + l0^2 |grad phi|^2) + g H
  double psi_plus = 0.0;
  std::array<double, 4> Fbar{};
  std::array<std::array<double, 3>, 4> DFbar{};
};

/// Energy density f_e + f_c - b.u and its derivatives with respect to the fields.
PointTerms point_energy(const PointFields& p, const PointContext& ctx);

/// The same density on any scalar type. F holds dim + 1 fields, DF is row-major (field, coordinate).
template <class S>
S point_density(int dim, std::span<const S> F, std::span<const S> DF, const PointContext& ctx) {
  using fracture::packed_index;
  const int n = fracture::packed_size(dim);
  std::array<S, 6> eps{};
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) eps[packed_index(i, j, dim)] = 0.5 * (DF[i * dim + j] + DF[j * dim + i]);
  S plus, minus;
  if constexpr (std::is_same_v<S, double>) {
    const auto s = fracture::split_energy(std::span<const double>(eps.data(), n), dim, *ctx.mat, ctx.split);
    plus = s.plus;
    minus = s.minus;
  } else {
    std::tie(plus, minus) = fracture::split_energy(std::span<const S>(eps.data(), n), dim, *ctx.mat, ctx.split);
  }
  S work = S(0.0);
  for (int i = 0; i < dim; ++i) work = work + ctx.body[i] * F[i];
  if (!ctx.crack) return plus + minus - work;
  const S phi = F[dim];
  const S fe = fracture::elastic_density(phi, plus, minus);
  S H = S(ctx.H_prev);
  if (ctx.policy == HistoryPolicy::Live) {
    using std::max;
    using ad::max;
    H = max(H, plus);
  }
  const S fc = fracture::fracture_density(phi, DF.subspan(static_cast<std::size_t>(dim) * dim, dim), H, *ctx.mat);
  return fe + fc - work;
}

/// Per-point transform coefficients with the load factored out:
/// field = load * A1 + B * raw (every preset's particular part is linear in the load).
struct CoefficientTable {
  Eigen::MatrixXd A1, B;                 // fields x points
  std::vector<Eigen::MatrixXd> dA1, dB;  // per coordinate, fields x points
};
CoefficientTable coefficient_table(const network::OutputTransform& t, std::span<const Point> points);

/// Fields and gradients at arbitrary points for given parameters.
struct FieldBlock {
  int dim = 0;
  Eigen::MatrixXd F;               // fields x points
  std::vector<Eigen::MatrixXd> DF;  // per coordinate, fields x points
};
FieldBlock evaluate_fields(const network::MlpParams& params, const network::OutputTransform& t, double load,
                           std::span<const Point> points);

struct EnergyOptions {
  HistoryPolicy policy = HistoryPolicy::Live;
  int chunk = 1024;
  int threads = 1;
};

struct EnergyValue {
  double total = 0.0;
  double elastic = 0.0;
  double fracture = 0.0;
};

/// V = sum_g w_g (f_e + f_c - b.u) over a Gauss cloud. Points are processed in
/// fixed chunks whose partial sums are reduced in chunk order, so the result
/// does not depend on the thread count.
class EnergyAssembler {
 public:
  EnergyAssembler(const Problem& problem, const fracture::Material& mat, const quadrature::GaussCloud& cloud,
                  const network::MlpArchitecture& arch, EnergyOptions opts);

  void set_load(double load) { load_ = load; }
  double load() const { return load_; }
  void set_history(std::span<const double> H_prev);
  const std::vector<double>& history() const { return H_; }
  void set_policy(HistoryPolicy p) { opts_.policy = p; }

  /// Layers below `first_layer` are treated as fixed: their activations are
  /// computed once from `params` and reused until the next call.
  void freeze_below(int first_layer, const network::MlpParams& params);
  int first_trainable() const { return first_layer_; }

  /// Energy and, when `grad` is given, its gradient with respect to layers >= first_trainable()
  /// (accumulated into zeroed `grad`).
  EnergyValue evaluate(const network::MlpParams& params, network::MlpParams* grad);

  /// Psi+ at every cloud point (0 inside elastic boxes).
  std::vector<double> psi_plus(const network::MlpParams& params);

  std::size_t size() const { return n_points_; }
  const std::vector<char>& crack_mask() const { return crack_; }

 private:
  struct Chunk {
    std::size_t begin = 0, end = 0;
    Eigen::MatrixXd X;
    CoefficientTable coef;
    Eigen::VectorXd w;
    network::BatchTrace trace;
    bool cached = false;
  };

  template <class Body>
  void for_chunks(Body&& body);

  const Problem* problem_;
  const fracture::Material* mat_;
  network::MlpArchitecture arch_;
  EnergyOptions opts_;
  std::size_t n_points_ = 0;
  std::vector<Chunk> chunks_;
  std::vector<Point> body_;
  std::vector<char> crack_;
  std::vector<double> H_;
  double load_ = 0.0;
  int first_layer_ = 0;
};

}  // namespace pfpinn::solver
