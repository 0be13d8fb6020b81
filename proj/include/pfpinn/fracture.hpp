#pragma once

// Constitutive layer of the phase-field model: small-strain kinematics,
// spectral tension/compression split, degradation, energy densities and the
// history field that keeps cracks from healing.

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pfpinn/autodiff.hpp"
#include "pfpinn/geometry.hpp"

namespace pfpinn::fracture {

/// Lame constants (kN/mm^2), critical energy release rate (kN/mm), length scale (mm).
struct Material {
  double lambda = 0.0;
  double mu = 0.0;
  double Gc = 0.0;
  double l0 = 0.0;

  void validate(int dim) const;
  bool operator==(const Material&) const = default;
};

enum class SplitMode {
  Spectral,  // tensile/compressive split on principal strains
  None,      // the whole strain energy counts as tensile
};

/// g(phi) = (1 - phi)^2
template <class S>
S degradation(const S& phi) {
  const S r = 1.0 - phi;
  return r * r;
}
inline double degradation(double phi) { return degradation<double>(phi); }

struct StrainState {
  int dim = 0;
  Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
  std::array<double, 3> eigenvalues{};  // descending, first `dim` entries used
  double trace = 0.0;
};

/// eps = sym(grad u) and its principal strains.
StrainState strain_from_grad(const Eigen::Matrix3d& grad_u, int dim);

/// Eigenvalues of a symmetric matrix in descending order: closed form in 2D,
/// trigonometric Cardano in 3D.
std::array<double, 3> symmetric_eigenvalues(const Eigen::Matrix3d& eps, int dim);

struct EnergySplit {
  double plus = 0.0;
  double minus = 0.0;
};

/// Psi+ = lambda/8 (ls + |ls|)^2 + mu/4 sum (li + |li|)^2, Psi- likewise with minus signs.
EnergySplit psi_split(std::span<const double> eigs, const Material& mat);

/// lambda/2 (tr eps)^2 + mu tr(eps^2).
double undecomposed_energy(const Eigen::Matrix3d& eps, int dim, const Material& mat);

/// Split energies of a strain tensor together with dPsi+/deps and dPsi-/deps.
struct SplitWithStress {
  EnergySplit psi;
  Eigen::Matrix3d dplus = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dminus = Eigen::Matrix3d::Zero();
};
SplitWithStress split_with_stress(const Eigen::Matrix3d& eps, int dim, const Material& mat, SplitMode mode);

/// Number of independent components of a symmetric dim x dim tensor and the
/// position of (i, j) in the packed upper-triangular layout (row by row).
constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }
int packed_index(int i, int j, int dim);

/// Split energies of a packed symmetric strain. The traced overload records a
/// single composite node whose partials are the exact stresses.
EnergySplit split_energy(std::span<const double> eps_packed, int dim, const Material& mat, SplitMode mode);
std::pair<ad::Var, ad::Var> split_energy(std::span<const ad::Var> eps_packed, int dim, const Material& mat,
                                         SplitMode mode);

/// f_e = g(phi) Psi+ + Psi-
template <class S>
S elastic_density(const S& phi, const S& psi_plus, const S& psi_minus) {
  return degradation(phi) * psi_plus + psi_minus;
}
inline double elastic_density(double phi, double psi_plus, double psi_minus) {
  return elastic_density<double>(phi, psi_plus, psi_minus);
}

/// f_c = Gc/(2 l0) (phi^2 + l0^2 |grad phi|^2) + g(phi) H
template <class S>
S fracture_density(const S& phi, std::span<const S> grad_phi, const S& H, const Material& mat) {
  S g2 = S(0.0);
  for (const S& c : grad_phi) g2 = g2 + c * c;
  return mat.Gc / (2.0 * mat.l0) * (phi * phi + mat.l0 * mat.l0 * g2) + degradation(phi) * H;
}
inline double fracture_density(double phi, std::span<const double> grad_phi, double H, const Material& mat) {
  return fracture_density<double>(phi, grad_phi, H, mat);
}

/// H(x, 0) = B Gc/(2 l0) (1 - 2d/l0) for d <= l0/2, else 0.
double initial_history(double distance, const Material& mat, double B);
std::vector<double> init_history(std::span<const Point> points, const geometry::Crack& crack, const Material& mat,
                                 double B);

/// Stepped seed: `value` wherever the crack distance is <= radius.
std::vector<double> init_history_step(std::span<const Point> points, const geometry::Crack& crack, double value,
                                      double radius);

/// max(H_prev, Psi+)
inline double update_history(double h_prev, double psi_plus) { return std::max(h_prev, psi_plus); }

/// Pointwise history values at a fixed set of points.
struct HistoryField {
  std::vector<double> values;
  int step = -1;  // last committed displacement step, -1 for the seed

  /// Max-update with the tensile energies of a converged step.
  void commit(std::span<const double> psi_plus, int step_index);
};

}  // namespace pfpinn::fracture
