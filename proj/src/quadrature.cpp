#include "pfpinn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace pfpinn::quadrature {

GaussRule1D gauss_legendre_1d(int n) {
  if (n < 1 || n > 64) throw std::out_of_range("gauss_legendre_1d: n must lie in [1, 64]");
  GaussRule1D rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    // Re-evaluate the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

namespace {

std::vector<std::size_t> canonical_order(const geometry::ElementMesh& mesh) {
  std::vector<std::size_t> order(mesh.cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = mesh.cells[a];
    const auto& cb = mesh.cells[b];
    if (ca.patch != cb.patch) return ca.patch < cb.patch;
    for (int k = 2; k >= 0; --k)
      if (ca.lo[k] != cb.lo[k]) return ca.lo[k] < cb.lo[k];
    for (int k = 2; k >= 0; --k)
      if (ca.hi[k] != cb.hi[k]) return ca.hi[k] < cb.hi[k];
    return false;
  });
  return order;
}

}  // namespace

GaussCloud build_cloud(const geometry::ElementMesh& mesh, std::span<const geometry::NurbsPatch> patches,
                       int n_per_dim) {
  if (n_per_dim < 1) throw std::invalid_argument("build_cloud: n_per_dim must be >= 1");
  const GaussRule1D rule = gauss_legendre_1d(n_per_dim);
  const int d = mesh.dim;
  GaussCloud cloud;
  cloud.dim = d;
  std::size_t per_cell = 1;
  for (int k = 0; k < d; ++k) per_cell *= static_cast<std::size_t>(n_per_dim);
  const std::size_t total = per_cell * mesh.cells.size();
  cloud.points.reserve(total);
  cloud.weights.reserve(total);
  cloud.cell.reserve(total);
  cloud.param.reserve(total);
  cloud.patch.reserve(total);

  const std::array<int, 3> n{n_per_dim, d > 1 ? n_per_dim : 1, d > 2 ? n_per_dim : 1};
  const auto order = canonical_order(mesh);
  for (std::size_t ci = 0; ci < order.size(); ++ci) {
    const geometry::Cell& cell = mesh.cells[order[ci]];
    if (cell.patch < 0 || static_cast<std::size_t>(cell.patch) >= patches.size())
      throw std::out_of_range("build_cloud: cell refers to a missing patch");
    const auto& patch = patches[cell.patch];
    for (int c = 0; c < n[2]; ++c)
      for (int b = 0; b < n[1]; ++b)
        for (int a = 0; a < n[0]; ++a) {
          const std::array<int, 3> idx{a, b, c};
          Point xi{0.0, 0.0, 0.0};
          double w = 1.0;
          for (int k = 0; k < d; ++k) {
            const double h = cell.hi[k] - cell.lo[k];
            xi[k] = cell.lo[k] + 0.5 * h * (rule.nodes[idx[k]] + 1.0);
            w *= rule.weights[idx[k]] * 0.5 * h;
          }
          const geometry::PatchPoint pp = geometry::patch_map(patch, xi);
          cloud.points.push_back(pp.x);
          cloud.weights.push_back(w * std::abs(pp.det));
          cloud.cell.push_back(static_cast<int>(ci));
          cloud.param.push_back(xi);
          cloud.patch.push_back(cell.patch);
        }
  }
  return cloud;
}

GaussCloud build_cloud(const geometry::ElementMesh& mesh, const geometry::NurbsPatch& patch, int n_per_dim) {
  return build_cloud(mesh, std::span<const geometry::NurbsPatch>(&patch, 1), n_per_dim);
}

double integrate(std::span<const double> values, const GaussCloud& cloud) {
  if (values.size() != cloud.weights.size())
    throw std::invalid_argument("integrate: " + std::to_string(values.size()) + " values for " +
                                std::to_string(cloud.weights.size()) + " points");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * cloud.weights[i];
  return s;
}

BoundaryCloud build_boundary_cloud(const geometry::ElementMesh& mesh,
                                   std::span<const geometry::NurbsPatch> patches, const PatchFace& face,
                                   int n_per_dim) {
  const GaussRule1D rule = gauss_legendre_1d(n_per_dim);
  const int d = mesh.dim;
  if (face.direction < 0 || face.direction >= d) throw std::invalid_argument("boundary face direction out of range");
  if (face.patch < 0 || static_cast<std::size_t>(face.patch) >= patches.size())
    throw std::out_of_range("boundary face refers to a missing patch");
  const auto& patch = patches[face.patch];
  const double fixed = face.side == 0 ? 0.0 : 1.0;

  std::vector<int> tangential;
  for (int k = 0; k < d; ++k)
    if (k != face.direction) tangential.push_back(k);

  BoundaryCloud out;
  out.cloud.dim = d;
  const auto order = canonical_order(mesh);
  for (std::size_t ci = 0; ci < order.size(); ++ci) {
    const geometry::Cell& cell = mesh.cells[order[ci]];
    if (cell.patch != face.patch) continue;
    const double bound = face.side == 0 ? cell.lo[face.direction] : cell.hi[face.direction];
    if (bound != fixed) continue;
    const int n1 = !tangential.empty() ? n_per_dim : 1;
    const int n2 = tangential.size() > 1 ? n_per_dim : 1;
    for (int b = 0; b < n2; ++b)
      for (int a = 0; a < n1; ++a) {
        Point xi = cell.center();
        xi[face.direction] = fixed;
        double w = 1.0;
        const std::array<int, 2> idx{a, b};
        for (std::size_t t = 0; t < tangential.size(); ++t) {
          const int k = tangential[t];
          const double h = cell.hi[k] - cell.lo[k];
          xi[k] = cell.lo[k] + 0.5 * h * (rule.nodes[idx[t]] + 1.0);
          w *= rule.weights[idx[t]] * 0.5 * h;
        }
        const geometry::PatchPoint pp = geometry::patch_map_unchecked(patch, xi);
        const Eigen::Matrix3d& J = pp.jacobian;
        Eigen::Vector3d normal = Eigen::Vector3d::Zero();
        double measure = 1.0;
        if (d == 1) {
          normal(0) = 1.0;
        } else if (d == 2) {
          const Eigen::Vector3d t = J.col(tangential[0]);
          measure = t.head<2>().norm();
          normal = Eigen::Vector3d(t(1), -t(0), 0.0) / measure;
        } else {
          const Eigen::Vector3d n = J.col(tangential[0]).cross(J.col(tangential[1]));
          measure = n.norm();
          normal = n / measure;
        }
        // Orient outward: along +dx/dxi_dir on side 1, against it on side 0.
        const double s = normal.dot(J.col(face.direction));
        if ((face.side == 1 && s < 0.0) || (face.side == 0 && s > 0.0)) normal = -normal;
        out.cloud.points.push_back(pp.x);
        out.cloud.weights.push_back(w * measure);
        out.cloud.cell.push_back(static_cast<int>(ci));
        out.cloud.param.push_back(xi);
        out.cloud.patch.push_back(face.patch);
        out.normals.push_back({normal(0), normal(1), normal(2)});
      }
  }
  return out;
}

void write_cloud_csv(std::ostream& os, const GaussCloud& cloud) {
  static const char* names[] = {"x", "y", "z"};
  for (int k = 0; k < cloud.dim; ++k) os << names[k] << ",";
  os << "weight,cell\n";
  os.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < cloud.dim; ++k) os << cloud.points[i][k] << ",";
    os << cloud.weights[i] << "," << cloud.cell[i] << "\n";
  }
}

}  // namespace pfpinn::quadrature
