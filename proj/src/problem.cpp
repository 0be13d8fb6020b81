#include "pfpinn/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pfpinn::solver {

using geometry::Cell;
using geometry::ElementMesh;
using geometry::NurbsPatch;

bool ElasticBox::contains(const Point& x, int dim) const {
  for (int k = 0; k < dim; ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"bar1d", "senp-tension", "asym-bend-3holes", "cube-tension"};
  return names;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Piecewise-linear 1D patch on [-1, 1] whose knot spans are the three
// sections [-1, -2l0], [-2l0, 2l0], [2l0, 1], each split into `per_section` cells.
NurbsPatch bar_patch(double l0, int per_section) {
  const std::array<double, 4> edges{-1.0, -2.0 * l0, 2.0 * l0, 1.0};
  std::vector<double> xs{-1.0};
  for (int s = 0; s < 3; ++s)
    for (int i = 1; i <= per_section; ++i) xs.push_back(edges[s] + (edges[s + 1] - edges[s]) * i / per_section);
  xs.back() = 1.0;
  std::vector<double> knots{0.0};
  for (double x : xs) knots.push_back(0.5 * (x + 1.0));
  knots.back() = 1.0;
  knots.push_back(1.0);
  std::vector<Point> cps;
  for (double x : xs) cps.push_back({x, 0.0, 0.0});
  std::vector<double> w(cps.size(), 1.0);
  return NurbsPatch({geometry::KnotVector(1, std::move(knots))}, std::move(cps), std::move(w));
}

double bar_u_exact(double x) {
  const double s = std::sin(kPi * x) / (kPi * kPi);
  return x < 0.0 ? s - (1.0 + x) / kPi : s + (1.0 - x) / kPi;
}

Problem make_bar(const fracture::Material& mat) {
  Problem p;
  p.name = "bar1d";
  p.dim = 1;
  p.patches.push_back(bar_patch(mat.l0, 14));
  p.mesh = ElementMesh::from_knot_spans(0, p.patches[0]);
  p.transform = {network::TransformKind::Bar1d, 1};
  p.split = fracture::SplitMode::None;
  p.crack.points.push_back({0.0, 0.0, 0.0});
  p.seed = HistorySeed::Step;
  p.seed_value = 1000.0;
  p.seed_radius = mat.l0;
  p.body_force = [](const Point& x) { return Point{std::sin(kPi * x[0]), 0.0, 0.0}; };
  p.loaded_faces.push_back({0, 0, 1});
  p.load_direction = 0;
  p.load_scale = 1.0;
  const double l0 = mat.l0;
  p.exact = [l0](const Point& x) { return std::vector<double>{bar_u_exact(x[0]), std::exp(-std::abs(x[0]) / l0)}; };
  p.default_gauss = 8;
  p.default_grid = 2001;
  return p;
}

Problem make_senp(int levels) {
  if (levels < 0) levels = 2;
  if (levels > 2) throw InputError("refinement.levels: senp-tension supports 0, 1 or 2");
  Problem p;
  p.name = "senp-tension";
  p.dim = 2;
  p.patches.push_back(geometry::box_patch(2, {0, 0, 0}, {1, 1, 0}, {16, 18, 1}));
  p.mesh = ElementMesh::from_knot_spans(0, p.patches[0]);
  // Band of half-width 1/6, then 1/18, around the crack line y = 0.5.
  const std::array<double, 2> band{1.0 / 6.0, 1.0 / 18.0};
  for (int l = 0; l < levels; ++l)
    p.mesh = geometry::refine_region(
        p.mesh, [&](const Cell& c) { return c.level == l && std::abs(c.center()[1] - 0.5) < band[l]; }, 1);
  p.transform = {network::TransformKind::SenpTension, 2};
  p.split = fracture::SplitMode::Spectral;
  p.crack.segments.push_back({{0.0, 0.5, 0.0}, {0.5, 0.5, 0.0}});
  p.seed = HistorySeed::Taper;
  p.loaded_faces.push_back({0, 1, 1});
  p.load_direction = 1;
  p.load_scale = 1000.0;
  p.default_gauss = 8;
  p.default_grid = 201;
  return p;
}

Problem make_3holes(int levels) {
  if (levels < 0) levels = 1;
  Problem p;
  p.name = "asym-bend-3holes";
  p.dim = 2;
  const double hx = 8.0, r = 0.25, half = 0.5;
  const std::array<double, 3> hy{2.75, 4.75, 6.75};
  auto box = [&](double x0, double y0, double x1, double y1, int nx, int ny) {
    p.patches.push_back(geometry::box_patch(2, {x0, y0, 0}, {x1, y1, 0}, {nx, ny, 1}));
  };
  box(0.0, 0.0, hx - half, 8.0, 15, 16);
  box(hx + half, 0.0, 20.0, 8.0, 23, 16);
  box(hx - half, 0.0, hx + half, hy[0] - half, 2, 5);
  box(hx - half, hy[0] + half, hx + half, hy[1] - half, 2, 2);
  box(hx - half, hy[1] + half, hx + half, hy[2] - half, 2, 2);
  box(hx - half, hy[2] + half, hx + half, 8.0, 2, 2);
  for (double y : hy)
    for (int side = 0; side < 4; ++side) p.patches.push_back(geometry::hole_sector_patch({hx, y, 0.0}, r, half, side));

  ElementMesh mesh;
  mesh.dim = 2;
  for (std::size_t i = 0; i < p.patches.size(); ++i) {
    ElementMesh m = ElementMesh::from_knot_spans(static_cast<int>(i), p.patches[i]);
    // Hole sectors start with 2 x 2 cells.
    if (i >= 6) m = geometry::refine_region(m, [](const Cell&) { return true; }, 1);
    mesh.append(m);
  }
  // Refine along the expected crack path between the notch and the holes.
  auto patches = p.patches;
  for (int l = 0; l < levels; ++l)
    mesh = geometry::refine_region(
        mesh,
        [&](const Cell& c) {
          const Point x = geometry::patch_map(patches[c.patch], c.center()).x;
          return c.level <= l + (c.patch >= 6 ? 1 : 0) && x[0] > 5.0 && x[0] < 10.0;
        },
        1);
  p.mesh = std::move(mesh);
  p.transform = {network::TransformKind::AsymBend3Holes, 2};
  p.split = fracture::SplitMode::Spectral;
  p.crack.segments.push_back({{6.0, 0.0, 0.0}, {6.0, 1.5, 0.0}});
  p.seed = HistorySeed::Taper;
  p.elastic_boxes.push_back({{0.0, 0.0, 0.0}, {3.0, 8.0, 0.0}});
  p.elastic_boxes.push_back({{17.0, 0.0, 0.0}, {20.0, 8.0, 0.0}});
  p.reaction = ReactionMode::Lifting;
  p.load_direction = 1;
  p.load_scale = 1000.0;
  p.default_gauss = 5;
  p.default_grid = 21;
  return p;
}

Problem make_cube(int levels) {
  if (levels < 0) levels = 0;
  Problem p;
  p.name = "cube-tension";
  p.dim = 3;
  p.patches.push_back(geometry::box_patch(3, {0, 0, 0}, {1, 1, 1}, {8, 8, 8}));
  p.mesh = ElementMesh::from_knot_spans(0, p.patches[0]);
  for (int l = 0; l < levels; ++l)
    p.mesh = geometry::refine_region(
        p.mesh, [&](const Cell& c) { return c.level == l && std::abs(c.center()[2] - 0.5) < 0.125; }, 1);
  p.transform = {network::TransformKind::CubeTension, 3};
  p.split = fracture::SplitMode::Spectral;
  p.crack.planes.push_back({{0.0, 0.0, 0.5}, {0.5, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  p.seed = HistorySeed::Taper;
  p.loaded_faces.push_back({0, 2, 1});
  p.load_direction = 2;
  p.load_scale = 1000.0;
  p.default_gauss = 4;
  p.default_grid = 51;
  return p;
}

}  // namespace

fracture::Material default_material(const std::string& preset) {
  if (preset == "bar1d") return {0.0, 0.5, 1.0, 0.0125};
  if (preset == "senp-tension") return {121.15, 80.77, 2.7e-3, 0.0125};
  if (preset == "asym-bend-3holes") return {12.0, 8.0, 1e-3, 0.25};
  if (preset == "cube-tension") return {12.0, 8.0, 0.5e-3, 0.0625};
  throw InputError("unknown preset '" + preset + "'");
}

Problem make_problem(const std::string& preset, const fracture::Material& mat, int refinement_levels) {
  if (preset == "bar1d") return make_bar(mat);
  if (preset == "senp-tension") return make_senp(refinement_levels);
  if (preset == "asym-bend-3holes") return make_3holes(refinement_levels);
  if (preset == "cube-tension") return make_cube(refinement_levels);
  throw InputError("unknown preset '" + preset + "'");
}

std::vector<DirichletSample> sample_dirichlet(const Problem& problem, double load, std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<DirichletSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = U(rng), b = U(rng);
    const int pick = static_cast<int>(U(rng) * 3.0) % 3;
    switch (problem.transform.kind) {
      case network::TransformKind::Bar1d:
        out.push_back({{a < 0.5 ? -1.0 : 1.0, 0.0, 0.0}, 0, 0.0});
        break;
      case network::TransformKind::SenpTension:
        if (pick == 0) out.push_back({{0.0, a, 0.0}, 0, 0.0});
        else if (pick == 1) out.push_back({{a, 0.0, 0.0}, 1, 0.0});
        else out.push_back({{a, 1.0, 0.0}, 1, load});
        break;
      case network::TransformKind::AsymBend3Holes: {
        static const std::array<DirichletSample, 4> fixed{DirichletSample{{1.0, 0.0, 0.0}, 1, 0.0},
                                                          DirichletSample{{19.0, 0.0, 0.0}, 0, 0.0},
                                                          DirichletSample{{19.0, 0.0, 0.0}, 1, 0.0},
                                                          DirichletSample{{10.0, 8.0, 0.0}, 1, 0.0}};
        DirichletSample s = fixed[i % 4];
        if (i % 4 == 3) s.value = -load;
        out.push_back(s);
        break;
      }
      case network::TransformKind::CubeTension:
        if (pick < 2) out.push_back({{a, b, 0.0}, i % 3, 0.0});
        else out.push_back({{a, b, 1.0}, 2, load});
        break;
      case network::TransformKind::Identity:
        throw InputError("sample_dirichlet: the identity transform prescribes nothing");
    }
  }
  return out;
}

std::vector<double> seed_history(const Problem& problem, std::span<const Point> points, const fracture::Material& mat,
                                 double B) {
  if (problem.seed == HistorySeed::Step)
    return fracture::init_history_step(points, problem.crack, problem.seed_value, problem.seed_radius);
  std::vector<double> h = fracture::init_history(points, problem.crack, mat, B);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (const auto& box : problem.elastic_boxes)
      if (box.contains(points[i], problem.dim)) h[i] = 0.0;
  return h;
}

PredictionGrid make_grid(const Problem& problem, int res) {
  if (res < 2) throw InputError("output.grid must be >= 2");
  PredictionGrid g;
  g.res = res;
  const int d = problem.dim;
  const std::array<int, 3> n{res, d > 1 ? res : 1, d > 2 ? res : 1};
  for (std::size_t pi = 0; pi < problem.patches.size(); ++pi)
    for (int c = 0; c < n[2]; ++c)
      for (int b = 0; b < n[1]; ++b)
        for (int a = 0; a < n[0]; ++a) {
          const std::array<int, 3> idx{a, b, c};
          Point xi{0.0, 0.0, 0.0};
          for (int k = 0; k < d; ++k) xi[k] = static_cast<double>(idx[k]) / (res - 1);
          g.points.push_back(geometry::patch_map_unchecked(problem.patches[pi], xi).x);
          g.patch.push_back(static_cast<int>(pi));
        }
  return g;
}

}  // namespace pfpinn::solver
