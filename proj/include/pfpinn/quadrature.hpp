#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pfpinn/geometry.hpp"

namespace pfpinn::quadrature {

struct GaussRule1D {
  std::vector<double> nodes;    // ascending, on [-1, 1]
  std::vector<double> weights;  // positive, sum to 2
};

/// n-point Gauss-Legendre rule, 1 <= n <= 64.
GaussRule1D gauss_legendre_1d(int n);

/// Physical quadrature points with Jacobian-scaled weights.
struct GaussCloud {
  int dim = 0;
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<int> cell;     // canonical cell index of each point
  std::vector<Point> param;  // parametric coordinates inside the owning patch
  std::vector<int> patch;

  std::size_t size() const { return points.size(); }
};

/// Gauss points of every cell (n_per_dim^d each). Cells are visited in a
/// canonical order (patch, then lower corner z, y, x) so the cloud does not
/// depend on how the mesh enumerates its cells.
GaussCloud build_cloud(const geometry::ElementMesh& mesh, std::span<const geometry::NurbsPatch> patches,
                       int n_per_dim);
GaussCloud build_cloud(const geometry::ElementMesh& mesh, const geometry::NurbsPatch& patch, int n_per_dim);

/// Sum of values[i] * weights[i].
double integrate(std::span<const double> values, const GaussCloud& cloud);

/// A face of a patch: parametric `direction` held at 0 (side 0) or 1 (side 1).
struct PatchFace {
  int patch = 0;
  int direction = 0;
  int side = 1;
};

/// Quadrature on a patch face: points, surface-measure weights and outward unit normals.
struct BoundaryCloud {
  GaussCloud cloud;
  std::vector<Point> normals;
};

/// Gauss points on the face, one tensor rule per mesh cell touching it.
BoundaryCloud build_boundary_cloud(const geometry::ElementMesh& mesh,
                                   std::span<const geometry::NurbsPatch> patches, const PatchFace& face,
                                   int n_per_dim);

/// Debug export: `x[,y[,z]],weight,cell` with a header row.
void write_cloud_csv(std::ostream& os, const GaussCloud& cloud);

}  // namespace pfpinn::quadrature
