#ifndef CONVEXINEQ_GRID_HPP
#define CONVEXINEQ_GRID_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "convexineq/linalg.hpp"
#include "convexineq/parallel.hpp"

namespace convexineq {

/// Tensor node grid on [-R, R]^n with nodes x_i = -R + i·h, i = 0..2M.
///
/// Nodes are never materialized; for_each_node streams them. The even-index
/// sub-grid is the same rule at step 2h, and the nodes with max|x_i| ≤ 0.9R
/// form the truncated rule. Comparing the three gives the refinement error
/// estimate used by every grid expectation.
struct QuadratureGrid {
  int dim = 1;
  double radius = 1.0;
  int points_per_dim = 3;  // always odd

  double step() const { return 2.0 * radius / (points_per_dim - 1); }
  double inner_radius() const { return 0.9 * radius; }
  double cell_volume() const { return std::pow(step(), dim); }
  std::int64_t node_count() const {
    std::int64_t c = 1;
    for (int d = 0; d < dim; ++d) c *= points_per_dim;
    return c;
  }

  static QuadratureGrid make(int dim, double radius, int points_per_dim) {
    if (dim < 1) throw ParameterError("grid dimension must be positive");
    if (!(radius > 0) || !std::isfinite(radius)) throw ParameterError("grid radius must be positive");
    if (points_per_dim < 3) throw ParameterError("grid needs at least 3 points per axis");
    if (points_per_dim % 2 == 0) ++points_per_dim;
    return QuadratureGrid{dim, radius, points_per_dim};
  }

  /// visit(x, coarse, inner) on every node of shard `s` (first-axis slabs).
  template <class Visit>
  void for_each_node_in_slab(int slab, Visit&& visit) const {
    const double h = step();
    const double rin = inner_radius() + 1e-12 * radius;
    Vec x(dim);
    std::vector<int> idx(dim, 0);
    idx[0] = slab;
    const std::int64_t rest = node_count() / points_per_dim;
    for (std::int64_t k = 0; k < rest; ++k) {
      std::int64_t r = k;
      for (int d = dim - 1; d >= 1; --d) {
        idx[d] = static_cast<int>(r % points_per_dim);
        r /= points_per_dim;
      }
      bool coarse = true;
      bool inner = true;
      for (int d = 0; d < dim; ++d) {
        x(d) = -radius + idx[d] * h;
        coarse = coarse && (idx[d] % 2 == 0);
        inner = inner && (std::abs(x(d)) <= rin);
      }
      visit(x, coarse, inner);
    }
  }
};

/// Accumulates k integrands over the full, coarse (2h) and truncated rules.
struct GridSums {
  std::vector<double> full, coarse, inner;
  double mass_full = 0, mass_coarse = 0, mass_inner = 0;

  explicit GridSums(int k = 0) : full(k, 0.0), coarse(k, 0.0), inner(k, 0.0) {}

  void merge(const GridSums& o) {
    for (std::size_t i = 0; i < full.size(); ++i) {
      full[i] += o.full[i];
      coarse[i] += o.coarse[i];
      inner[i] += o.inner[i];
    }
    mass_full += o.mass_full;
    mass_coarse += o.mass_coarse;
    mass_inner += o.mass_inner;
  }
};

/// Streams the grid in parallel slabs. weight(x) returns the unnormalized
/// density; integrand(x, out) fills k values. Merge order is fixed.
template <class Weight, class Integrand>
GridSums accumulate_grid(const QuadratureGrid& grid, int k, Weight&& weight,
                         Integrand&& integrand) {
  std::vector<GridSums> slabs(grid.points_per_dim, GridSums(k));
  parallel_for(grid.points_per_dim, [&](int s) {
    GridSums& acc = slabs[s];
    std::vector<double> vals(k);
    grid.for_each_node_in_slab(s, [&](const Vec& x, bool coarse, bool inner) {
      const double w = weight(x);
      if (w == 0.0) return;
      integrand(x, vals);
      acc.mass_full += w;
      if (coarse) acc.mass_coarse += w;
      if (inner) acc.mass_inner += w;
      for (int j = 0; j < k; ++j) {
        const double v = w * vals[j];
        acc.full[j] += v;
        if (coarse) acc.coarse[j] += v;
        if (inner) acc.inner[j] += v;
      }
    });
  });
  GridSums total(k);
  for (const auto& s : slabs) total.merge(s);
  return total;
}

}  // namespace convexineq

#endif  // CONVEXINEQ_GRID_HPP
