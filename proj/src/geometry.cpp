#include "pfpinn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pfpinn::geometry {

namespace {

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

// Non-zero basis functions of degree q on span s (Piegl & Tiller A2.2).
void basis_funs(const std::vector<double>& U, int s, double xi, int q, std::vector<double>& N) {
  N.assign(q + 1, 0.0);
  N[0] = 1.0;
  std::vector<double> left(q + 1), right(q + 1);
  for (int j = 1; j <= q; ++j) {
    left[j] = xi - U[s + 1 - j];
    right[j] = U[s + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : N[r] / denom;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
}

}  // namespace

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 0) throw InputError("knot vector: negative degree");
  const auto n = static_cast<int>(knots_.size());
  if (n < 2 * (degree_ + 1)) throw InputError("knot vector: too few knots for the degree");
  for (int i = 1; i < n; ++i)
    if (knots_[i] < knots_[i - 1]) throw InputError("knot vector: knots must be non-decreasing");
  for (int i = 0; i <= degree_; ++i) {
    if (knots_[i] != 0.0) throw InputError("knot vector: first p+1 knots must equal 0");
    if (knots_[n - 1 - i] != 1.0) throw InputError("knot vector: last p+1 knots must equal 1");
  }
}

KnotVector KnotVector::uniform(int degree, int spans) {
  if (spans < 1) throw InputError("knot vector: need at least one span");
  std::vector<double> k(degree + 1, 0.0);
  for (int i = 1; i < spans; ++i) k.push_back(static_cast<double>(i) / spans);
  k.insert(k.end(), degree + 1, 1.0);
  return KnotVector(degree, std::move(k));
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> b;
  for (double k : knots_)
    if (b.empty() || k != b.back()) b.push_back(k);
  return b;
}

int KnotVector::find_span(double xi) const {
  const int n = num_basis();
  if (xi >= knots_[n]) {
    int s = n - 1;
    while (s > degree_ && knots_[s] == knots_[s + 1]) --s;
    return s;
  }
  if (xi <= knots_[degree_]) {
    int s = degree_;
    while (s < n - 1 && knots_[s] == knots_[s + 1]) ++s;
    return s;
  }
  int lo = degree_, hi = n;
  int mid = (lo + hi) / 2;
  while (xi < knots_[mid] || xi >= knots_[mid + 1]) {
    if (xi < knots_[mid]) hi = mid;
    else lo = mid;
    mid = (lo + hi) / 2;
  }
  return mid;
}

double bspline_basis(const KnotVector& kv, int i, double xi) {
  const auto& U = kv.knots();
  const int p = kv.degree();
  if (i < 0 || i >= kv.num_basis())
    throw std::out_of_range("bspline_basis: index " + std::to_string(i) + " out of range [0," +
                            std::to_string(kv.num_basis()) + ")");
  // Degree-zero functions are half-open intervals, except that xi = 1 belongs
  // to the last non-empty span.
  const int last = kv.find_span(1.0);
  std::function<double(int, int)> rec = [&](int j, int q) -> double {
    if (q == 0) {
      if (U[j] <= xi && xi < U[j + 1]) return 1.0;
      return (xi == U.back() && j == last) ? 1.0 : 0.0;
    }
    double v = 0.0;
    const double d1 = U[j + q] - U[j];
    const double d2 = U[j + q + 1] - U[j + 1];
    if (d1 > 0.0) v += (xi - U[j]) / d1 * rec(j, q - 1);
    if (d2 > 0.0) v += (U[j + q + 1] - xi) / d2 * rec(j + 1, q - 1);
    return v;
  };
  return rec(i, p);
}

BasisValues eval_basis(const KnotVector& kv, double xi) {
  const auto& U = kv.knots();
  const int p = kv.degree();
  BasisValues out;
  out.span = kv.find_span(xi);
  basis_funs(U, out.span, xi, p, out.values);
  out.derivatives.assign(p + 1, 0.0);
  if (p == 0) return out;
  std::vector<double> lower;
  basis_funs(U, out.span, xi, p - 1, lower);  // indices span-p+1 .. span
  for (int r = 0; r <= p; ++r) {
    const int i = out.span - p + r;
    double d = 0.0;
    if (r >= 1) {
      const double den = U[i + p] - U[i];
      if (den > 0.0) d += lower[r - 1] / den;
    }
    if (r <= p - 1) {
      const double den = U[i + p + 1] - U[i + 1];
      if (den > 0.0) d -= lower[r] / den;
    }
    out.derivatives[r] = p * d;
  }
  return out;
}

NurbsPatch::NurbsPatch(std::vector<KnotVector> knots, std::vector<Point> control_points,
                       std::vector<double> weights)
    : knots_(std::move(knots)), control_points_(std::move(control_points)), weights_(std::move(weights)) {
  if (knots_.empty() || knots_.size() > 3) throw InputError("NURBS patch: dimension must be 1, 2 or 3");
  std::size_t expected = 1;
  for (const auto& kv : knots_) expected *= static_cast<std::size_t>(kv.num_basis());
  if (control_points_.size() != expected)
    throw InputError("NURBS patch: expected " + std::to_string(expected) + " control points, got " +
                     std::to_string(control_points_.size()));
  if (weights_.size() != expected) throw InputError("NURBS patch: weight grid does not match control grid");
  for (double w : weights_)
    if (!(w > 0.0)) throw InputError("NURBS patch: weights must be strictly positive");
}

namespace {

struct TensorBasis {
  int dim = 0;
  std::array<BasisValues, 3> b;
  std::array<int, 3> n{1, 1, 1};  // control points per direction
};

TensorBasis tensor_basis(const NurbsPatch& patch, const Point& xi) {
  TensorBasis t;
  t.dim = patch.dim();
  for (int k = 0; k < 3; ++k) {
    if (k < t.dim) {
      t.b[k] = eval_basis(patch.knots(k), xi[k]);
      t.n[k] = patch.num_control(k);
    } else {
      t.b[k].span = 0;
      t.b[k].values = {1.0};
      t.b[k].derivatives = {0.0};
    }
  }
  return t;
}

template <class Visit>
void for_each_nonzero(const NurbsPatch& patch, const TensorBasis& t, Visit&& visit) {
  const int p0 = static_cast<int>(t.b[0].values.size()) - 1;
  const int p1 = static_cast<int>(t.b[1].values.size()) - 1;
  const int p2 = static_cast<int>(t.b[2].values.size()) - 1;
  (void)patch;
  for (int c = 0; c <= p2; ++c) {
    const int i2 = t.b[2].span - p2 + c;
    for (int b = 0; b <= p1; ++b) {
      const int i1 = t.b[1].span - p1 + b;
      for (int a = 0; a <= p0; ++a) {
        const int i0 = t.b[0].span - p0 + a;
        const int idx = i0 + t.n[0] * (i1 + t.n[1] * i2);
        const std::array<double, 3> N{t.b[0].values[a], t.b[1].values[b], t.b[2].values[c]};
        const std::array<double, 3> dN{t.b[0].derivatives[a], t.b[1].derivatives[b],
                                       t.b[2].derivatives[c]};
        visit(idx, N, dN);
      }
    }
  }
}

}  // namespace

std::vector<double> NurbsPatch::rational_basis(const Point& xi) const {
  const TensorBasis t = tensor_basis(*this, xi);
  std::vector<double> R(control_points_.size(), 0.0);
  double W = 0.0;
  for_each_nonzero(*this, t, [&](int idx, const auto& N, const auto&) {
    const double v = weights_[idx] * N[0] * N[1] * N[2];
    R[idx] = v;
    W += v;
  });
  for (double& r : R) r /= W;
  return R;
}

PatchPoint patch_map_unchecked(const NurbsPatch& patch, const Point& xi) {
  const int d = patch.dim();
  for (int k = 0; k < d; ++k)
    if (!(xi[k] >= 0.0 && xi[k] <= 1.0))
      throw std::domain_error("patch_map: parametric coordinate outside [0,1]");
  const TensorBasis t = tensor_basis(patch, xi);
  const auto& P = patch.control_points();
  const auto& w = patch.weights();
  double W = 0.0;
  std::array<double, 3> dW{0.0, 0.0, 0.0};
  Point num{0.0, 0.0, 0.0};
  std::array<Point, 3> dnum{};
  for_each_nonzero(patch, t, [&](int idx, const auto& N, const auto& dN) {
    const double prod = w[idx] * N[0] * N[1] * N[2];
    const std::array<double, 3> dprod{w[idx] * dN[0] * N[1] * N[2], w[idx] * N[0] * dN[1] * N[2],
                                      w[idx] * N[0] * N[1] * dN[2]};
    W += prod;
    for (int k = 0; k < 3; ++k) dW[k] += dprod[k];
    for (int c = 0; c < 3; ++c) {
      num[c] += prod * P[idx][c];
      for (int k = 0; k < 3; ++k) dnum[k][c] += dprod[k] * P[idx][c];
    }
  });
  PatchPoint out;
  out.jacobian.setZero();
  for (int c = 0; c < 3; ++c) out.x[c] = num[c] / W;
  for (int c = 0; c < d; ++c)
    for (int k = 0; k < d; ++k) out.jacobian(c, k) = (dnum[k][c] - out.x[c] * dW[k]) / W;
  for (int c = d; c < 3; ++c) out.jacobian(c, c) = 1.0;
  out.det = out.jacobian.determinant();
  return out;
}

PatchPoint patch_map(const NurbsPatch& patch, const Point& xi) {
  PatchPoint out = patch_map_unchecked(patch, xi);
  if (!(out.det > 0.0)) {
    std::ostringstream os;
    os << "patch_map: degenerate geometry, det J = " << out.det << " at xi = (" << xi[0] << ", "
       << xi[1] << ", " << xi[2] << ")";
    throw std::domain_error(os.str());
  }
  return out;
}

NurbsPatch box_patch(int dim, const Point& lo, const Point& hi, const std::array<int, 3>& spans) {
  if (dim < 1 || dim > 3) throw InputError("box_patch: dimension must be 1, 2 or 3");
  std::vector<KnotVector> kvs;
  std::array<int, 3> n{1, 1, 1};
  for (int k = 0; k < dim; ++k) {
    kvs.push_back(KnotVector::uniform(1, spans[k]));
    n[k] = spans[k] + 1;
  }
  std::vector<Point> cps;
  for (int c = 0; c < n[2]; ++c)
    for (int b = 0; b < n[1]; ++b)
      for (int a = 0; a < n[0]; ++a) {
        const std::array<int, 3> idx{a, b, c};
        Point p{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k)
          p[k] = lo[k] + (hi[k] - lo[k]) * static_cast<double>(idx[k]) / spans[k];
        cps.push_back(p);
      }
  std::vector<double> w(cps.size(), 1.0);
  return NurbsPatch(std::move(kvs), std::move(cps), std::move(w));
}

NurbsPatch hole_sector_patch(const Point& centre, double r, double half, int side) {
  if (!(r > 0.0) || !(half > r)) throw InputError("hole_sector_patch: need 0 < r < half");
  const double s = std::numbers::sqrt2 / 2.0;
  // Reference sector facing +x, traversed clockwise so that det J > 0.
  const std::array<Point, 3> inner{Point{r * s, r * s, 0.0}, Point{r * std::numbers::sqrt2, 0.0, 0.0},
                                   Point{r * s, -r * s, 0.0}};
  const std::array<Point, 3> outer{Point{half, half, 0.0}, Point{half, 0.0, 0.0},
                                   Point{half, -half, 0.0}};
  const double angle = side * std::numbers::pi / 2.0;
  const double c = std::cos(angle), sn = std::sin(angle);
  auto place = [&](const Point& p) {
    // Exact quarter turns keep the control net free of rounding noise.
    const double rc = std::round(c), rs = std::round(sn);
    return Point{centre[0] + rc * p[0] - rs * p[1], centre[1] + rs * p[0] + rc * p[1], 0.0};
  };
  std::vector<Point> cps;
  for (const auto& p : inner) cps.push_back(place(p));
  for (const auto& p : outer) cps.push_back(place(p));
  std::vector<double> w{1.0, s, 1.0, 1.0, s, 1.0};
  return NurbsPatch({KnotVector(2, {0, 0, 0, 1, 1, 1}), KnotVector(1, {0, 0, 1, 1})}, std::move(cps),
                    std::move(w));
}

NurbsPatch quarter_disc_patch(double r) {
  const double s = std::numbers::sqrt2 / 2.0;
  std::vector<Point> cps{Point{0, 0, 0}, Point{0, 0, 0}, Point{0, 0, 0},
                         Point{0, r, 0}, Point{r, r, 0}, Point{r, 0, 0}};
  std::vector<double> w{1.0, s, 1.0, 1.0, s, 1.0};
  return NurbsPatch({KnotVector(2, {0, 0, 0, 1, 1, 1}), KnotVector(1, {0, 0, 1, 1})}, std::move(cps),
                    std::move(w));
}

Point Cell::center() const {
  return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
}

double Cell::volume(int dim) const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= hi[k] - lo[k];
  return v;
}

ElementMesh ElementMesh::from_knot_spans(int patch_id, const NurbsPatch& patch) {
  ElementMesh mesh;
  mesh.dim = patch.dim();
  std::array<std::vector<double>, 3> br;
  for (int k = 0; k < 3; ++k) br[k] = k < mesh.dim ? patch.knots(k).breakpoints() : std::vector<double>{0.0, 0.0};
  for (std::size_t c = 0; c + 1 < br[2].size(); ++c)
    for (std::size_t b = 0; b + 1 < br[1].size(); ++b)
      for (std::size_t a = 0; a + 1 < br[0].size(); ++a) {
        Cell cell;
        cell.patch = patch_id;
        cell.lo = {br[0][a], br[1][b], br[2][c]};
        cell.hi = {br[0][a + 1], br[1][b + 1], br[2][c + 1]};
        mesh.cells.push_back(cell);
      }
  return mesh;
}

void ElementMesh::append(const ElementMesh& other) {
  if (cells.empty() && dim == 0) dim = other.dim;
  if (other.dim != dim) throw InputError("ElementMesh::append: dimension mismatch");
  cells.insert(cells.end(), other.cells.begin(), other.cells.end());
}

ElementMesh refine_region(const ElementMesh& mesh, const CellPredicate& marked, int levels) {
  if (levels < 0) throw InputError("refine_region: levels must be non-negative");
  ElementMesh current = mesh;
  const int d = mesh.dim;
  for (int pass = 0; pass < levels; ++pass) {
    ElementMesh next;
    next.dim = d;
    next.cells.reserve(current.cells.size());
    for (const Cell& cell : current.cells) {
      if (!marked(cell)) {
        next.cells.push_back(cell);
        continue;
      }
      const Point mid = cell.center();
      for (int child = 0; child < (1 << d); ++child) {
        Cell c = cell;
        c.level = cell.level + 1;
        for (int k = 0; k < d; ++k) {
          if (child & (1 << k)) c.lo[k] = mid[k];
          else c.hi[k] = mid[k];
        }
        next.cells.push_back(c);
      }
    }
    current = std::move(next);
  }
  return current;
}

std::string check_tiling(const ElementMesh& mesh) {
  const int d = mesh.dim;
  std::map<int, double> volume;
  for (const Cell& c : mesh.cells) {
    for (int k = 0; k < d; ++k)
      if (!(c.lo[k] >= 0.0 && c.hi[k] <= 1.0 && c.lo[k] < c.hi[k])) return "cell outside [0,1]^d or empty";
    volume[c.patch] += c.volume(d);
  }
  for (const auto& [patch, v] : volume)
    if (std::abs(v - 1.0) > 1e-12)
      return "patch " + std::to_string(patch) + " volume " + std::to_string(v) + " != 1";
  for (std::size_t i = 0; i < mesh.cells.size(); ++i)
    for (std::size_t j = i + 1; j < mesh.cells.size(); ++j) {
      const Cell& a = mesh.cells[i];
      const Cell& b = mesh.cells[j];
      if (a.patch != b.patch) continue;
      bool overlap = true;
      for (int k = 0; k < d && overlap; ++k)
        overlap = std::min(a.hi[k], b.hi[k]) - std::max(a.lo[k], b.lo[k]) > 1e-14;
      if (overlap) return "cells " + std::to_string(i) + " and " + std::to_string(j) + " overlap";
    }
  return {};
}

void Crack::validate() const {
  for (const auto& s : segments)
    if (!(norm(sub(s.b, s.a)) > 0.0)) throw InputError("crack segment has zero length");
  for (const auto& p : planes) {
    const double n1 = norm(p.e1), n2 = norm(p.e2);
    if (!(n1 > 0.0) || !(n2 > 0.0)) throw InputError("crack plane has a zero-length edge");
    if (std::abs(dot(p.e1, p.e2)) > 1e-12 * n1 * n2) throw InputError("crack plane edges must be orthogonal");
  }
}

double crack_distance(const Point& x, const CrackSegment& crack) {
  const Point ab = sub(crack.b, crack.a);
  const Point ax = sub(x, crack.a);
  const double t = std::clamp(dot(ax, ab) / dot(ab, ab), 0.0, 1.0);
  const Point q{crack.a[0] + t * ab[0], crack.a[1] + t * ab[1], crack.a[2] + t * ab[2]};
  return norm(sub(x, q));
}

double crack_distance(const Point& x, const CrackPlane& crack) {
  const Point r = sub(x, crack.origin);
  const double s = std::clamp(dot(r, crack.e1) / dot(crack.e1, crack.e1), 0.0, 1.0);
  const double t = std::clamp(dot(r, crack.e2) / dot(crack.e2, crack.e2), 0.0, 1.0);
  Point q;
  for (int k = 0; k < 3; ++k) q[k] = crack.origin[k] + s * crack.e1[k] + t * crack.e2[k];
  return norm(sub(x, q));
}

double crack_distance(const Point& x, const Crack& crack) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : crack.points) d = std::min(d, norm(sub(x, p)));
  for (const auto& s : crack.segments) d = std::min(d, crack_distance(x, s));
  for (const auto& p : crack.planes) d = std::min(d, crack_distance(x, p));
  return d;
}

}  // namespace pfpinn::geometry
