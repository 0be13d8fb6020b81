#pragma once

// NURBS patches, quadtree/octree element meshes over their parameter domains,
// and the initial-crack descriptions used to seed the history field.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfpinn/types.hpp"

namespace pfpinn::geometry {

/// Open knot vector on [0,1].
class KnotVector {
 public:
  KnotVector(int degree, std::vector<double> knots);

  /// Open uniform knot vector with `spans` equal knot spans.
  static KnotVector uniform(int degree, int spans);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  /// Distinct knot values (element boundaries), ascending.
  std::vector<double> breakpoints() const;
  /// Index s with knots[s] <= xi < knots[s+1]; xi == 1 maps to the last non-empty span.
  int find_span(double xi) const;

 private:
  int degree_;
  std::vector<double> knots_;
};

/// B-spline basis N_{i,p}(xi) by the Cox-de Boor recursion.
double bspline_basis(const KnotVector& kv, int i, double xi);

/// The p+1 non-zero basis functions at xi and their first derivatives.
struct BasisValues {
  int span = 0;  // first non-zero function index is span - degree
  std::vector<double> values;
  std::vector<double> derivatives;
};
BasisValues eval_basis(const KnotVector& kv, double xi);

/// Result of mapping a parametric point to physical space.
struct PatchPoint {
  Point x{};
  Eigen::Matrix3d jacobian = Eigen::Matrix3d::Identity();  // dx/dxi, top-left dim x dim block
  double det = 1.0;
};

/// Tensor-product NURBS map from [0,1]^d onto a physical patch in R^d.
/// Control points are stored with the first parametric index running fastest.
class NurbsPatch {
 public:
  NurbsPatch(std::vector<KnotVector> knots, std::vector<Point> control_points,
             std::vector<double> weights);

  int dim() const { return static_cast<int>(knots_.size()); }
  const KnotVector& knots(int direction) const { return knots_[direction]; }
  const std::vector<Point>& control_points() const { return control_points_; }
  const std::vector<double>& weights() const { return weights_; }
  int num_control(int direction) const { return knots_[direction].num_basis(); }

  /// Rational basis R_i(xi) for every control point (mostly zeros).
  std::vector<double> rational_basis(const Point& xi) const;

 private:
  std::vector<KnotVector> knots_;
  std::vector<Point> control_points_;
  std::vector<double> weights_;
};

/// x(xi) and its Jacobian; throws std::domain_error when det J <= 0.
PatchPoint patch_map(const NurbsPatch& patch, const Point& xi);

/// Same as patch_map without the orientation check (used for boundary edges
/// of patches that degenerate at a corner).
PatchPoint patch_map_unchecked(const NurbsPatch& patch, const Point& xi);

/// Axis-aligned multilinear patch covering [lo, hi] with `spans` knot spans per direction.
NurbsPatch box_patch(int dim, const Point& lo, const Point& hi, const std::array<int, 3>& spans);

/// One of four quadratic patches around a circular hole of radius `r` centred at
/// `centre`, filling the square of half-width `half` around it. `side` selects the
/// square edge (0 = +x, 1 = +y, 2 = -x, 3 = -y). xi runs along the arc, eta radially out.
NurbsPatch hole_sector_patch(const Point& centre, double r, double half, int side);

/// Quarter disc of radius r in the first quadrant, collapsed at the origin
/// (eta = 0 edge); the eta = 1 edge is the exact circular arc.
NurbsPatch quarter_disc_patch(double r);

struct Cell {
  int patch = 0;
  Point lo{};
  Point hi{};
  int level = 0;

  Point center() const;
  double volume(int dim) const;
};

/// Parametric cells carrying quadrature; they tile [0,1]^d of every patch.
struct ElementMesh {
  int dim = 0;
  std::vector<Cell> cells;

  std::size_t size() const { return cells.size(); }
  /// Initial tensor-product mesh of a patch: one cell per non-empty knot span box.
  static ElementMesh from_knot_spans(int patch_id, const NurbsPatch& patch);
  /// Appends the cells of another mesh with the same dimension.
  void append(const ElementMesh& other);
};

using CellPredicate = std::function<bool(const Cell&)>;

/// `levels` passes of cross insertion: every cell for which `marked` holds is
/// split into 2^d children at its midpoint.
ElementMesh refine_region(const ElementMesh& mesh, const CellPredicate& marked, int levels);

/// Checks the tiling invariant: per patch the parametric volumes sum to one and
/// the cells are pairwise interior-disjoint. Returns an empty string when valid.
std::string check_tiling(const ElementMesh& mesh);

/// Straight crack segment between two points.
struct CrackSegment {
  Point a{};
  Point b{};
};

/// Rectangular planar crack {origin + s e1 + t e2 : s, t in [0,1]}, e1 orthogonal to e2.
struct CrackPlane {
  Point origin{};
  Point e1{};
  Point e2{};
};

/// Initial discrete crack: union of points (1D), segments (2D) and planes (3D).
struct Crack {
  std::vector<Point> points;
  std::vector<CrackSegment> segments;
  std::vector<CrackPlane> planes;

  void validate() const;
  bool empty() const { return points.empty() && segments.empty() && planes.empty(); }
};

/// Euclidean distance from x to the segment.
double crack_distance(const Point& x, const CrackSegment& crack);
double crack_distance(const Point& x, const CrackPlane& crack);
/// Distance to the closest crack piece.
double crack_distance(const Point& x, const Crack& crack);

}  // namespace pfpinn::geometry
