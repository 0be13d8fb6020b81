#include "pfpinn/fracture.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace pfpinn::fracture {

void Material::validate(int dim) const {
  if (!(mu > 0.0)) throw InputError("material.mu must be positive");
  if (!(Gc > 0.0)) throw InputError("material.Gc must be positive");
  if (!(l0 > 0.0)) throw InputError("material.l0 must be positive");
  if (!(lambda > -(2.0 / dim) * mu)) throw InputError("material.lambda violates ellipticity (lambda > -2 mu / d)");
}

StrainState strain_from_grad(const Eigen::Matrix3d& grad_u, int dim) {
  if (!grad_u.allFinite()) throw std::domain_error("strain_from_grad: non-finite displacement gradient");
  StrainState s;
  s.dim = dim;
  s.eps.setZero();
  const Eigen::Matrix3d sym = 0.5 * (grad_u + grad_u.transpose());
  s.eps.topLeftCorner(dim, dim) = sym.topLeftCorner(dim, dim);
  s.eigenvalues = symmetric_eigenvalues(s.eps, dim);
  s.trace = s.eps.trace();
  return s;
}

std::array<double, 3> symmetric_eigenvalues(const Eigen::Matrix3d& e, int dim) {
  std::array<double, 3> ev{0.0, 0.0, 0.0};
  if (dim == 1) {
    ev[0] = e(0, 0);
  } else if (dim == 2) {
    const double mean = 0.5 * (e(0, 0) + e(1, 1));
    const double half_diff = 0.5 * (e(0, 0) - e(1, 1));
    const double r = std::sqrt(half_diff * half_diff + e(0, 1) * e(0, 1));
    ev[0] = mean + r;
    ev[1] = mean - r;
  } else if (dim == 3) {
    const double p1 = e(0, 1) * e(0, 1) + e(0, 2) * e(0, 2) + e(1, 2) * e(1, 2);
    const double q = e.trace() / 3.0;
    const double p2 = (e(0, 0) - q) * (e(0, 0) - q) + (e(1, 1) - q) * (e(1, 1) - q) +
                      (e(2, 2) - q) * (e(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) {
      ev = {q, q, q};
    } else {
      const Eigen::Matrix3d B = (e - q * Eigen::Matrix3d::Identity()) / p;
      const double r = std::clamp(B.determinant() / 2.0, -1.0, 1.0);
      const double phi = std::acos(r) / 3.0;
      ev[0] = q + 2.0 * p * std::cos(phi);
      ev[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
      ev[1] = 3.0 * q - ev[0] - ev[2];
    }
  } else {
    throw std::invalid_argument("symmetric_eigenvalues: dimension must be 1, 2 or 3");
  }
  return ev;
}

EnergySplit psi_split(std::span<const double> eigs, const Material& mat) {
  double ls = 0.0;
  for (double l : eigs) ls += l;
  const double sp = ls + std::abs(ls);
  const double sm = ls - std::abs(ls);
  EnergySplit out;
  out.plus = mat.lambda / 8.0 * sp * sp;
  out.minus = mat.lambda / 8.0 * sm * sm;
  double mp = 0.0, mm = 0.0;
  for (double l : eigs) {
    const double a = l + std::abs(l);
    const double b = l - std::abs(l);
    mp += a * a;
    mm += b * b;
  }
  out.plus += mat.mu / 4.0 * mp;
  out.minus += mat.mu / 4.0 * mm;
  return out;
}

double undecomposed_energy(const Eigen::Matrix3d& eps, int dim, const Material& mat) {
  const Eigen::MatrixXd e = eps.topLeftCorner(dim, dim);
  const double tr = e.trace();
  return 0.5 * mat.lambda * tr * tr + mat.mu * (e * e).trace();
}

namespace {

// Principal directions as columns of Q, paired with `values` (descending).
void principal_axes(const Eigen::Matrix3d& e, int dim, std::array<double, 3>& values, Eigen::Matrix3d& Q) {
  Q.setIdentity();
  if (dim == 1) {
    values = {e(0, 0), 0.0, 0.0};
  } else if (dim == 2) {
    values = symmetric_eigenvalues(e, 2);
    const double theta = 0.5 * std::atan2(2.0 * e(0, 1), e(0, 0) - e(1, 1));
    const double c = std::cos(theta), s = std::sin(theta);
    Q(0, 0) = c;
    Q(1, 0) = s;
    Q(0, 1) = -s;
    Q(1, 1) = c;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(e);
    // Eigen sorts ascending; flip to descending.
    for (int i = 0; i < 3; ++i) {
      values[i] = solver.eigenvalues()(2 - i);
      Q.col(i) = solver.eigenvectors().col(2 - i);
    }
  }
}

}  // namespace

SplitWithStress split_with_stress(const Eigen::Matrix3d& eps, int dim, const Material& mat, SplitMode mode) {
  SplitWithStress out;
  Eigen::Matrix3d I = Eigen::Matrix3d::Zero();
  I.topLeftCorner(dim, dim).setIdentity();
  const double tr = eps.trace();
  if (mode == SplitMode::None) {
    out.psi.plus = undecomposed_energy(eps, dim, mat);
    out.psi.minus = 0.0;
    out.dplus = mat.lambda * tr * I + 2.0 * mat.mu * eps;
    return out;
  }
  const std::array<double, 3> closed = symmetric_eigenvalues(eps, dim);
  out.psi = psi_split(std::span<const double>(closed.data(), dim), mat);

  std::array<double, 3> values{};
  Eigen::Matrix3d Q;
  principal_axes(eps, dim, values, Q);
  Eigen::Matrix3d eps_plus = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d eps_minus = Eigen::Matrix3d::Zero();
  for (int i = 0; i < dim; ++i) {
    const Eigen::Matrix3d P = Q.col(i) * Q.col(i).transpose();
    eps_plus += std::max(values[i], 0.0) * P;
    eps_minus += std::min(values[i], 0.0) * P;
  }
  out.dplus = mat.lambda * std::max(tr, 0.0) * I + 2.0 * mat.mu * eps_plus;
  out.dminus = mat.lambda * std::min(tr, 0.0) * I + 2.0 * mat.mu * eps_minus;
  return out;
}

int packed_index(int i, int j, int dim) {
  if (i > j) std::swap(i, j);
  // Rows of the upper triangle: row r holds dim - r entries.
  int idx = 0;
  for (int r = 0; r < i; ++r) idx += dim - r;
  return idx + (j - i);
}

namespace {

Eigen::Matrix3d unpack(std::span<const double> packed, int dim) {
  Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      e(i, j) = packed[packed_index(i, j, dim)];
      e(j, i) = e(i, j);
    }
  return e;
}

}  // namespace

EnergySplit split_energy(std::span<const double> eps_packed, int dim, const Material& mat, SplitMode mode) {
  const Eigen::Matrix3d e = unpack(eps_packed, dim);
  if (mode == SplitMode::None) return {undecomposed_energy(e, dim, mat), 0.0};
  const std::array<double, 3> ev = symmetric_eigenvalues(e, dim);
  return psi_split(std::span<const double>(ev.data(), dim), mat);
}

std::pair<ad::Var, ad::Var> split_energy(std::span<const ad::Var> eps_packed, int dim, const Material& mat,
                                         SplitMode mode) {
  std::array<double, 6> vals{};
  const int n = packed_size(dim);
  for (int k = 0; k < n; ++k) vals[k] = eps_packed[k].value();
  const Eigen::Matrix3d e = unpack(std::span<const double>(vals.data(), n), dim);
  const SplitWithStress s = split_with_stress(e, dim, mat, mode);
  // Recompute the values exactly as the untraced path does.
  const EnergySplit psi = split_energy(std::span<const double>(vals.data(), n), dim, mat, mode);
  std::array<double, 6> dp{}, dm{};
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      const double f = i == j ? 1.0 : 2.0;  // off-diagonal entries appear twice in the tensor
      dp[packed_index(i, j, dim)] = f * s.dplus(i, j);
      dm[packed_index(i, j, dim)] = f * s.dminus(i, j);
    }
  const auto inputs = eps_packed.first(n);
  ad::Var plus = ad::custom(psi.plus, inputs, std::span<const double>(dp.data(), n), "psi_plus");
  ad::Var minus = ad::custom(psi.minus, inputs, std::span<const double>(dm.data(), n), "psi_minus");
  return {plus, minus};
}

double initial_history(double distance, const Material& mat, double B) {
  if (distance > 0.5 * mat.l0) return 0.0;
  return B * mat.Gc / (2.0 * mat.l0) * (1.0 - 2.0 * distance / mat.l0);
}

std::vector<double> init_history(std::span<const Point> points, const geometry::Crack& crack, const Material& mat,
                                 double B) {
  if (!(B > 0.0)) throw InputError("history.B must be positive");
  std::vector<double> h(points.size(), 0.0);
  if (crack.empty()) return h;
  for (std::size_t i = 0; i < points.size(); ++i)
    h[i] = initial_history(geometry::crack_distance(points[i], crack), mat, B);
  return h;
}

std::vector<double> init_history_step(std::span<const Point> points, const geometry::Crack& crack, double value,
                                      double radius) {
  std::vector<double> h(points.size(), 0.0);
  if (crack.empty()) return h;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (geometry::crack_distance(points[i], crack) <= radius) h[i] = value;
  return h;
}

void HistoryField::commit(std::span<const double> psi_plus, int step_index) {
  if (psi_plus.size() != values.size()) throw std::invalid_argument("history commit: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = update_history(values[i], psi_plus[i]);
  step = step_index;
}

}  // namespace pfpinn::fracture
