#pragma once

// Benchmark problems: geometry, mesh, boundary transforms, initial crack,
// loaded boundary and (for the bar) the analytic solution.

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pfpinn/fracture.hpp"
#include "pfpinn/geometry.hpp"
#include "pfpinn/network.hpp"
#include "pfpinn/quadrature.hpp"

namespace pfpinn::solver {

/// Axis-aligned region whose points are kept undamaged (phi = 0, no fracture energy).
struct ElasticBox {
  Point lo{};
  Point hi{};
  bool contains(const Point& x, int dim) const;
};

enum class HistorySeed {
  Taper,  // H = B Gc/(2 l0) (1 - 2d/l0) within l0/2 of the crack
  Step,   // H = value within `radius` of the crack
};

enum class ReactionMode {
  Traction,  // integral of the traction over the loaded faces
  Lifting,   // sum of w sigma : grad(dA/d load) over the domain (point loads)
};

struct Problem {
  std::string name;
  int dim = 0;
  std::vector<geometry::NurbsPatch> patches;
  geometry::ElementMesh mesh;
  network::OutputTransform transform;
  fracture::SplitMode split = fracture::SplitMode::Spectral;
  geometry::Crack crack;
  HistorySeed seed = HistorySeed::Taper;
  double seed_value = 0.0;   // Step seed only
  double seed_radius = 0.0;  // Step seed only
  std::vector<ElasticBox> elastic_boxes;
  /// Body force per unit volume; empty when there is none.
  std::function<Point(const Point&)> body_force;
  ReactionMode reaction = ReactionMode::Traction;
  std::vector<quadrature::PatchFace> loaded_faces;
  int load_direction = 0;
  double load_scale = 1.0;  // reported load = scale * integral (kN -> N)
  /// Exact (u..., phi) at x when known.
  std::function<std::vector<double>(const Point&)> exact;
  int default_gauss = 4;
  int default_grid = 201;
};

/// Names accepted by make_problem().
const std::vector<std::string>& preset_names();

/// Material of a preset as published (bar: E = 1 as lambda = 0, mu = 1/2, with Gc = 1).
fracture::Material default_material(const std::string& preset);

/// Builds a preset. `refinement_levels` < 0 selects the preset default.
Problem make_problem(const std::string& preset, const fracture::Material& mat, int refinement_levels = -1);

/// A prescribed Dirichlet value: field `field` must equal `value` at x.
struct DirichletSample {
  Point x{};
  int field = 0;
  double value = 0.0;
};

/// Random points on the Dirichlet boundary of a preset with their prescribed values.
std::vector<DirichletSample> sample_dirichlet(const Problem& problem, double load, std::mt19937_64& rng, int n);

/// Initial history values at the given points.
std::vector<double> seed_history(const Problem& problem, std::span<const Point> points,
                                 const fracture::Material& mat, double B);

/// Uniform parametric grid of `res` points per axis on every patch, mapped to physical space.
struct PredictionGrid {
  int res = 0;
  std::vector<Point> points;
  std::vector<int> patch;
};
PredictionGrid make_grid(const Problem& problem, int res);

}  // namespace pfpinn::solver
