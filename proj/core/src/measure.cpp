#include "pamlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pamlab/error.hpp"

namespace pamlab {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

Point LatticeDensity::site(std::size_t flat) const {
  Point x(static_cast<std::size_t>(dim));
  for (int a = dim - 1; a >= 0; --a) {
    const auto i = flat % static_cast<std::size_t>(points_per_axis);
    flat /= static_cast<std::size_t>(points_per_axis);
    x[a] = origin[a] + static_cast<double>(i) * spacing;
  }
  return x;
}

int Measure::dim() const {
  if (!atoms.empty()) return static_cast<int>(atoms.front().location.size());
  if (!density.empty()) return density.front().dim;
  return 0;
}

double Measure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  for (const auto& d : density) {
    double s = 0.0;
    for (double v : d.values) s += v;
    m += s * std::pow(d.spacing, d.dim);
  }
  return m;
}

Measure Measure::dirac(Point location, double mass) {
  Measure m;
  m.support_radius = std::sqrt(squared_norm(location));
  m.atoms.push_back({std::move(location), mass});
  return m;
}

Measure Measure::uniform_interval(double lo, double hi, double mass, int cells) {
  require(hi > lo && cells > 0, ErrorKind::InvalidArgument, "uniform_interval: bad interval");
  LatticeDensity d;
  d.dim = 1;
  d.points_per_axis = cells;
  d.spacing = (hi - lo) / cells;
  d.origin = {lo + 0.5 * d.spacing};
  d.values.assign(static_cast<std::size_t>(cells), mass / (hi - lo));
  Measure m;
  m.density.push_back(std::move(d));
  m.support_radius = std::max(std::abs(lo), std::abs(hi));
  return m;
}

void Measure::validate() const {
  require(density.size() <= 1, ErrorKind::InvalidArgument, "measure: at most one density block");
  const int d = dim();
  require(d >= 1, ErrorKind::EmptyMeasure, "measure has no atoms and no density");
  const double slack = 1e-12 * (1.0 + support_radius);
  for (const auto& a : atoms) {
    require(static_cast<int>(a.location.size()) == d, ErrorKind::InvalidArgument, "measure: mixed dimensions");
    require(std::isfinite(a.mass) && a.mass > 0.0, ErrorKind::InvalidArgument, "measure: atom mass must be > 0");
    require(std::sqrt(squared_norm(a.location)) <= support_radius + slack, ErrorKind::InvalidArgument,
            "measure: atom outside support radius");
  }
  for (const auto& dens : density) {
    require(dens.dim == d && static_cast<int>(dens.origin.size()) == d, ErrorKind::InvalidArgument,
            "measure: density dimension mismatch");
    require(dens.spacing > 0.0 && dens.points_per_axis > 0, ErrorKind::InvalidArgument, "measure: bad density grid");
    const auto expected = static_cast<std::size_t>(std::pow(dens.points_per_axis, d) + 0.5);
    require(dens.values.size() == expected, ErrorKind::InvalidArgument, "measure: density size mismatch");
    for (std::size_t i = 0; i < dens.values.size(); ++i) {
      const double v = dens.values[i];
      require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument, "measure: negative density value");
      if (v > 0.0) {
        const auto x = dens.site(i);
        require(std::sqrt(squared_norm(x)) <= support_radius + slack, ErrorKind::InvalidArgument,
                "measure: density outside support radius");
      }
    }
  }
  const double mass = total_mass();
  require(std::isfinite(mass) && mass > 0.0, ErrorKind::EmptyMeasure, "measure has zero total mass");
}

}  // namespace pamlab
