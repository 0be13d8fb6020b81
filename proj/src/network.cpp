#include "pfpinn/network.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace pfpinn::network {

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2) throw InputError("network.layers needs at least an input and an output layer");
  for (int n : layer_sizes)
    if (n < 1) throw InputError("network.layers entries must be positive");
}

void MlpArchitecture::validate_for_dimension(int dim) const {
  validate();
  if (input_dim() != dim)
    throw InputError("network.layers must start with the spatial dimension " + std::to_string(dim));
  if (output_dim() != dim + 1)
    throw InputError("network.layers must end with " + std::to_string(dim + 1) +
                     " outputs (displacements and phase field)");
}

std::size_t MlpArchitecture::num_params() const { return layer_offset(num_layers()); }

std::size_t MlpArchitecture::layer_offset(int l) const {
  std::size_t off = 0;
  for (int k = 0; k < l; ++k)
    off += static_cast<std::size_t>(layer_sizes[k] + 1) * static_cast<std::size_t>(layer_sizes[k + 1]);
  return off;
}

MlpParams zeros(const MlpArchitecture& arch) {
  arch.validate();
  MlpParams p;
  p.arch = arch;
  for (int l = 0; l < arch.num_layers(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(arch.layer_sizes[l + 1], arch.layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(arch.layer_sizes[l + 1]));
  }
  return p;
}

MlpParams init_xavier(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpParams p = zeros(arch);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < arch.num_layers(); ++l) {
    const double fan_in = arch.layer_sizes[l];
    const double fan_out = arch.layer_sizes[l + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
    auto& W = p.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = dist(rng);
  }
  return p;
}

ad::ParamVector flatten(const MlpParams& params) {
  ad::ParamVector v;
  v.values.reserve(params.arch.num_params());
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    v.segments.push_back(v.values.size());
    const auto& W = params.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) v.values.push_back(W(i, j));
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) v.values.push_back(params.biases[l](i));
  }
  v.segments.push_back(v.values.size());
  return v;
}

void unflatten_into(std::span<const double> values, MlpParams& params) {
  if (values.size() != params.arch.num_params())
    throw std::invalid_argument("unflatten: expected " + std::to_string(params.arch.num_params()) +
                                " parameters, got " + std::to_string(values.size()));
  std::size_t off = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& W = params.weights[l];
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = values[off++];
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) params.biases[l](i) = values[off++];
  }
}

MlpParams unflatten(const MlpArchitecture& arch, std::span<const double> values) {
  MlpParams p = zeros(arch);
  unflatten_into(values, p);
  return p;
}

FreezeMask FreezeMask::last_layer_only(int num_layers) {
  FreezeMask m{std::vector<bool>(num_layers, false)};
  m.trainable.back() = true;
  return m;
}

int FreezeMask::first_trainable() const {
  for (std::size_t l = 0; l < trainable.size(); ++l)
    if (trainable[l]) return static_cast<int>(l);
  return static_cast<int>(trainable.size());
}

void FreezeMask::validate(int num_layers) const {
  if (static_cast<int>(trainable.size()) != num_layers)
    throw std::invalid_argument("freeze mask length does not match the number of layers");
  if (std::none_of(trainable.begin(), trainable.end(), [](bool b) { return b; }))
    throw std::invalid_argument("freeze mask must leave at least one layer trainable");
}

TrainableView::TrainableView(const MlpArchitecture& arch, const FreezeMask& mask) : mask_(mask) {
  mask_.validate(arch.num_layers());
  for (int l = 0; l < arch.num_layers(); ++l) {
    if (!mask_.trainable[l]) continue;
    for (std::size_t i = arch.layer_offset(l); i < arch.layer_offset(l + 1); ++i) index_.push_back(i);
  }
}

std::vector<double> TrainableView::gather(std::span<const double> flat) const {
  std::vector<double> v(index_.size());
  for (std::size_t i = 0; i < index_.size(); ++i) v[i] = flat[index_[i]];
  return v;
}

void TrainableView::scatter(std::span<const double> view, std::span<double> flat) const {
  for (std::size_t i = 0; i < index_.size(); ++i) flat[index_[i]] = view[i];
}

TrainableView trainable_view(const MlpArchitecture& arch, const FreezeMask& mask) {
  return TrainableView(arch, mask);
}

void batch_forward(const MlpParams& params, const Eigen::MatrixXd& X, BatchTrace& trace, int from_layer) {
  const int L = params.arch.num_layers();
  const int d = params.arch.input_dim();
  const Eigen::Index P = X.cols();
  trace.dim = d;
  trace.act.resize(L);
  trace.tan.resize(L);
  trace.pre_tan.resize(L);
  trace.dout.resize(d);
  if (from_layer == 0) trace.act[0] = X;
  for (int l = from_layer; l < L; ++l) {
    const auto& W = params.weights[l];
    Eigen::MatrixXd Z = W * trace.act[l];
    Z.colwise() += params.biases[l];
    std::vector<Eigen::MatrixXd> pre(d);
    for (int k = 0; k < d; ++k) {
      if (l == 0) pre[k] = W.col(k).replicate(1, P);
      else pre[k].noalias() = W * trace.tan[l][k];
    }
    if (l + 1 < L) {
      Eigen::MatrixXd A = Z.array().tanh().matrix();
      const Eigen::ArrayXXd S = 1.0 - A.array().square();
      trace.tan[l + 1].resize(d);
      for (int k = 0; k < d; ++k) trace.tan[l + 1][k] = (S * pre[k].array()).matrix();
      trace.act[l + 1] = std::move(A);
      trace.pre_tan[l] = std::move(pre);
    } else {
      trace.out = std::move(Z);
      for (int k = 0; k < d; ++k) trace.dout[k] = std::move(pre[k]);
    }
  }
}

void batch_backward(const MlpParams& params, const BatchTrace& trace, const Eigen::MatrixXd& out_bar,
                    const std::vector<Eigen::MatrixXd>& dout_bar, int stop_layer, MlpParams& grad) {
  const int L = params.arch.num_layers();
  const int d = trace.dim;
  Eigen::MatrixXd abar = out_bar;
  std::vector<Eigen::MatrixXd> tbar = dout_bar;
  std::vector<Eigen::MatrixXd> pbar(d);
  Eigen::MatrixXd zbar;
  for (int l = L - 1; l >= stop_layer; --l) {
    const auto& W = params.weights[l];
    if (l == L - 1) {
      zbar = std::move(abar);
      for (int k = 0; k < d; ++k) pbar[k] = std::move(tbar[k]);
    } else {
      const Eigen::ArrayXXd A = trace.act[l + 1].array();
      const Eigen::ArrayXXd S = 1.0 - A.square();
      Eigen::ArrayXXd Sbar = Eigen::ArrayXXd::Zero(A.rows(), A.cols());
      for (int k = 0; k < d; ++k) {
        Sbar += tbar[k].array() * trace.pre_tan[l][k].array();
        pbar[k] = (S * tbar[k].array()).matrix();
      }
      zbar = ((abar.array() - 2.0 * A * Sbar) * S).matrix();
    }
    grad.weights[l].noalias() += zbar * trace.act[l].transpose();
    for (int k = 0; k < d; ++k) {
      if (l == 0) grad.weights[0].col(k) += pbar[k].rowwise().sum();
      else grad.weights[l].noalias() += pbar[k] * trace.tan[l][k].transpose();
    }
    grad.biases[l] += zbar.rowwise().sum();
    if (l > stop_layer) {
      abar.noalias() = W.transpose() * zbar;
      tbar.resize(d);
      for (int k = 0; k < d; ++k) tbar[k].noalias() = W.transpose() * pbar[k];
    }
  }
}

TransformKind transform_from_name(const std::string& name) {
  if (name == "identity") return TransformKind::Identity;
  if (name == "bar1d") return TransformKind::Bar1d;
  if (name == "senp-tension") return TransformKind::SenpTension;
  if (name == "asym-bend-3holes") return TransformKind::AsymBend3Holes;
  if (name == "cube-tension") return TransformKind::CubeTension;
  throw InputError("unknown output transform '" + name + "'");
}

std::string transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity: return "identity";
    case TransformKind::Bar1d: return "bar1d";
    case TransformKind::SenpTension: return "senp-tension";
    case TransformKind::AsymBend3Holes: return "asym-bend-3holes";
    case TransformKind::CubeTension: return "cube-tension";
  }
  return "identity";
}

TransformCoefficients transform_coefficients(const OutputTransform& t, const Point& x, double load) {
  ad::Tape tape;
  std::vector<ad::Var> xv;
  for (int k = 0; k < t.dim; ++k) xv.push_back(ad::Var::independent(tape, x[k]));
  const int nf = t.num_fields();
  std::vector<ad::Var> A(nf), B(nf);
  t.coefficients<ad::Var>(xv, load, A, B);
  TransformCoefficients c;
  std::vector<double> adj;
  for (int i = 0; i < nf; ++i) {
    c.A[i] = A[i].value();
    c.B[i] = B[i].value();
    if (!A[i].is_constant()) {
      tape.adjoints(A[i].id(), adj);
      for (int k = 0; k < t.dim; ++k) c.dA[i][k] = adj[xv[k].id()];
    }
    if (!B[i].is_constant()) {
      tape.adjoints(B[i].id(), adj);
      for (int k = 0; k < t.dim; ++k) c.dB[i][k] = adj[xv[k].id()];
    }
  }
  return c;
}

namespace {

constexpr char kMagic[4] = {'P', 'F', 'P', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw InputError("checkpoint: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& cp) {
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cp.arch.layer_sizes.size()));
  for (int n : cp.arch.layer_sizes) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  put_le<std::uint64_t>(os, cp.seed);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(cp.step));
  put_le<std::uint64_t>(os, cp.params.size());
  for (double v : cp.params) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw InputError("checkpoint: bad magic");
  if (get_le<std::uint32_t>(is) != kVersion) throw InputError("checkpoint: unsupported version");
  Checkpoint cp;
  const auto n_layers = get_le<std::uint32_t>(is);
  if (n_layers > 1024) throw InputError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) cp.arch.layer_sizes.push_back(static_cast<int>(get_le<std::uint32_t>(is)));
  cp.arch.validate();
  cp.seed = get_le<std::uint64_t>(is);
  cp.step = static_cast<std::int64_t>(get_le<std::uint64_t>(is));
  const auto n = get_le<std::uint64_t>(is);
  if (n != cp.arch.num_params()) throw InputError("checkpoint: parameter count does not match architecture");
  cp.params.resize(n);
  for (auto& v : cp.params) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
  return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(os, cp);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint " + path);
  return read_checkpoint(is);
}

}  // namespace pfpinn::network
