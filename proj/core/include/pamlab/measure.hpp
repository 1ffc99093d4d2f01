#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pamlab {

using Point = std::vector<double>;

struct Atom {
  Point location;
  double mass = 0.0;
};

// Nonnegative density sampled on a regular lattice. Site i along an axis sits
// at origin[axis] + i * spacing; the quadrature weight of a site is spacing^dim.
struct LatticeDensity {
  int dim = 1;
  int points_per_axis = 0;
  double spacing = 0.0;
  Point origin;
  std::vector<double> values;  // row-major, last axis fastest

  Point site(std::size_t flat) const;
};

// Compactly supported nonnegative initial datum: atoms plus an optional
// lattice density.
struct Measure {
  std::vector<Atom> atoms;
  std::vector<LatticeDensity> density;  // zero or one entry
  double support_radius = 0.0;

  int dim() const;
  double total_mass() const;
  bool atomic() const { return density.empty(); }

  static Measure dirac(Point location, double mass = 1.0);
  // Uniform density on [lo, hi] (one dimension) with the given total mass,
  // sampled at `cells` cell centres.
  static Measure uniform_interval(double lo, double hi, double mass, int cells);

  // Throws InvalidArgument / EmptyMeasure when the invariants fail.
  void validate() const;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace pamlab
