#pragma once

// Fully connected tanh networks, Dirichlet-enforcing output transforms and
// layer freeze masks.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfpinn/autodiff.hpp"
#include "pfpinn/types.hpp"

namespace pfpinn::network {

/// Layer widths from input to output. Hidden layers use tanh, the output layer is linear.
struct MlpArchitecture {
  std::vector<int> layer_sizes;

  /// Throws InputError unless there are >= 2 layers of positive width.
  void validate() const;
  /// Additionally requires input = dim and output = dim + 1.
  void validate_for_dimension(int dim) const;
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  /// Number of weight layers (hidden layers + 1).
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t num_params() const;
  /// Offset of weight layer l in the flat parameter vector.
  std::size_t layer_offset(int l) const;
  bool operator==(const MlpArchitecture&) const = default;
};

/// Weights W[l] (out x in) and biases b[l] for every weight layer.
struct MlpParams {
  MlpArchitecture arch;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Glorot-normal weights, std = sqrt(2 / (fan_in + fan_out)); zero biases.
MlpParams init_xavier(const MlpArchitecture& arch, std::uint64_t seed);
MlpParams zeros(const MlpArchitecture& arch);

/// Flat layout: for every layer, W row-major followed by b. One segment per layer.
ad::ParamVector flatten(const MlpParams& params);
MlpParams unflatten(const MlpArchitecture& arch, std::span<const double> values);
/// In-place variant that reuses the matrices of `params`.
void unflatten_into(std::span<const double> values, MlpParams& params);

/// Feed-forward pass on any scalar type with flat parameters (layout as flatten()).
template <class S, class T>
std::vector<S> forward_flat(const MlpArchitecture& arch, std::span<const T> theta, std::span<const S> x) {
  using std::tanh;
  std::vector<S> a(x.begin(), x.end());
  std::size_t off = 0;
  const int L = arch.num_layers();
  for (int l = 0; l < L; ++l) {
    const int nin = arch.layer_sizes[l];
    const int nout = arch.layer_sizes[l + 1];
    const std::size_t boff = off + static_cast<std::size_t>(nin) * nout;
    std::vector<S> z(nout);
    for (int i = 0; i < nout; ++i) {
      S s = S(theta[boff + i]);
      for (int j = 0; j < nin; ++j) s = s + S(theta[off + static_cast<std::size_t>(i) * nin + j]) * a[j];
      z[i] = l + 1 < L ? S(tanh(s)) : s;
    }
    a = std::move(z);
    off = boff + nout;
  }
  return a;
}

/// Raw network outputs at x.
template <class S>
std::vector<S> forward(const MlpParams& params, std::span<const S> x) {
  using std::tanh;
  std::vector<S> a(x.begin(), x.end());
  const int L = params.arch.num_layers();
  for (int l = 0; l < L; ++l) {
    const auto& W = params.weights[l];
    const auto& b = params.biases[l];
    std::vector<S> z(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      S s = S(b(i));
      for (Eigen::Index j = 0; j < W.cols(); ++j) s = s + S(W(i, j)) * a[j];
      z[i] = l + 1 < L ? S(tanh(s)) : s;
    }
    a = std::move(z);
  }
  return a;
}

/// Per-layer trainable flags.
struct FreezeMask {
  std::vector<bool> trainable;

  static FreezeMask all(int num_layers) { return {std::vector<bool>(num_layers, true)}; }
  static FreezeMask last_layer_only(int num_layers);
  /// Index of the first trainable layer.
  int first_trainable() const;
  void validate(int num_layers) const;
};

/// Index map from the optimizer's view onto the flat parameter vector.
class TrainableView {
 public:
  TrainableView(const MlpArchitecture& arch, const FreezeMask& mask);

  std::size_t size() const { return index_.size(); }
  std::vector<double> gather(std::span<const double> flat) const;
  void scatter(std::span<const double> view, std::span<double> flat) const;
  const std::vector<std::size_t>& indices() const { return index_; }
  const FreezeMask& mask() const { return mask_; }

 private:
  FreezeMask mask_;
  std::vector<std::size_t> index_;
};

TrainableView trainable_view(const MlpArchitecture& arch, const FreezeMask& mask);

/// Batched forward/backward pass over many points with input tangents.
/// Columns are points. For each layer the activations and their derivatives
/// with respect to every input coordinate are kept for the reverse sweep.
struct BatchTrace {
  int dim = 0;
  std::vector<Eigen::MatrixXd> act;                   // act[l]: input of weight layer l
  std::vector<std::vector<Eigen::MatrixXd>> tan;      // tan[l][k] = d act[l] / d x_k (l >= 1)
  std::vector<std::vector<Eigen::MatrixXd>> pre_tan;  // pre_tan[l][k] = W_l tan[l][k] (hidden layers)
  Eigen::MatrixXd out;                                // raw outputs
  std::vector<Eigen::MatrixXd> dout;                  // d out / d x_k
};

/// Forward pass. When `from_layer` > 0, act[from_layer] and tan[from_layer]
/// must already hold values from a previous pass with identical lower layers.
void batch_forward(const MlpParams& params, const Eigen::MatrixXd& X, BatchTrace& trace, int from_layer = 0);

/// Accumulates into `grad` the parameter gradient of sum(out_bar .* out) +
/// sum_k sum(dout_bar[k] .* dout[k]), for layers >= stop_layer only.
void batch_backward(const MlpParams& params, const BatchTrace& trace, const Eigen::MatrixXd& out_bar,
                    const std::vector<Eigen::MatrixXd>& dout_bar, int stop_layer, MlpParams& grad);

/// Closed-form Dirichlet transforms, field_i = A_i(x) + B_i(x) * raw_i.
enum class TransformKind {
  Identity,         // no constraint
  Bar1d,            // u = (x+1)(x-1) u_hat
  SenpTension,      // u = x(1-x) u_hat, v = y(y-1) v_hat + y dv
  AsymBend3Holes,   // u = w2/(w2+1) u_hat, v = w1w2w3/prod(w_k+1) v_hat - (y/8) dv
  CubeTension,      // u = z u_hat, v = z v_hat, w = z(z-1) w_hat + z dw
};

TransformKind transform_from_name(const std::string& name);
std::string transform_name(TransformKind kind);

struct OutputTransform {
  TransformKind kind = TransformKind::Identity;
  int dim = 1;

  int num_fields() const { return dim + 1; }

  /// Particular part A and blending factor B of every field at x for the
  /// current prescribed displacement `load`. The phase field is never constrained.
  template <class S>
  void coefficients(std::span<const S> x, double load, std::span<S> A, std::span<S> B) const {
    for (int i = 0; i < num_fields(); ++i) {
      A[i] = S(0.0);
      B[i] = S(1.0);
    }
    switch (kind) {
      case TransformKind::Identity:
        break;
      case TransformKind::Bar1d:
        B[0] = (x[0] + 1.0) * (x[0] - 1.0);
        break;
      case TransformKind::SenpTension:
        B[0] = x[0] * (1.0 - x[0]);
        B[1] = x[1] * (x[1] - 1.0);
        A[1] = x[1] * load;
        break;
      case TransformKind::AsymBend3Holes: {
        const S w1 = (x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1];
        const S w2 = (x[0] - 19.0) * (x[0] - 19.0) + x[1] * x[1];
        const S w3 = (x[0] - 10.0) * (x[0] - 10.0) + (x[1] - 8.0) * (x[1] - 8.0);
        B[0] = w2 / (w2 + 1.0);
        B[1] = w1 * w2 * w3 / ((w1 + 1.0) * (w2 + 1.0) * (w3 + 1.0));
        A[1] = -(x[1] / 8.0) * load;
        break;
      }
      case TransformKind::CubeTension:
        B[0] = x[2];
        B[1] = x[2];
        B[2] = x[2] * (x[2] - 1.0);
        A[2] = x[2] * load;
        break;
    }
  }
};

/// Physical fields at x from raw network outputs.
template <class S>
std::vector<S> apply_transform(const OutputTransform& t, std::span<const S> x, double load,
                               std::span<const S> raw) {
  std::vector<S> A(t.num_fields()), B(t.num_fields()), out(t.num_fields());
  t.coefficients<S>(x, load, A, B);
  for (int i = 0; i < t.num_fields(); ++i) out[i] = A[i] + B[i] * raw[i];
  return out;
}

/// A, B and their spatial gradients at one point (gradients by AD).
struct TransformCoefficients {
  std::array<double, 4> A{};
  std::array<double, 4> B{};
  std::array<std::array<double, 3>, 4> dA{};
  std::array<std::array<double, 3>, 4> dB{};
};
TransformCoefficients transform_coefficients(const OutputTransform& t, const Point& x, double load);

/// Checkpoint: "PFPN" magic, format version, architecture, seed, step, then the
/// flat parameters; all integers and doubles little-endian.
struct Checkpoint {
  MlpArchitecture arch;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::vector<double> params;
};
void write_checkpoint(std::ostream& os, const Checkpoint& cp);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pfpinn::network
