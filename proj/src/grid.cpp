// Copyright 2026 The phasegrid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phasegrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "phasegrid/errors.hpp"

namespace phasegrid {

AdaptiveGrid::AdaptiveGrid(std::vector<GridCell> cells) : cells_(std::move(cells)) {
  if (cells_.empty()) {
    throw std::invalid_argument("grid needs at least one cell");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const GridCell& c = cells_[i];
    if (!(c.left < c.right) || !std::isfinite(c.left) || !std::isfinite(c.right)) {
      throw std::invalid_argument("cell " + std::to_string(i) + " has empty or non-finite span");
    }
    if (!(c.weight >= 0.0)) {
      throw std::invalid_argument("cell " + std::to_string(i) + " has negative weight");
    }
    if (i > 0 && cells_[i - 1].right != c.left) {
      throw std::invalid_argument("cells " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " are not contiguous");
    }
  }
}

double AdaptiveGrid::total_weight() const noexcept {
  double sum = 0.0;
  for (const GridCell& c : cells_) sum += c.weight;
  return sum;
}

AdaptiveGrid AdaptiveGrid::with_weights(std::span<const double> weights) const {
  if (weights.size() != cells_.size()) {
    throw std::invalid_argument("weight count does not match cell count");
  }
  std::vector<GridCell> out = cells_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].weight = weights[i];
  return AdaptiveGrid(std::move(out));
}

AdaptiveGrid uniform_grid(double lo, double hi, std::size_t n) {
  if (!(lo < hi)) {
    throw std::invalid_argument("uniform_grid requires lo < hi");
  }
  if (n < 3) {
    throw std::invalid_argument("uniform_grid requires at least 3 cells for the difference stencils");
  }
  std::vector<GridCell> cells(n);
  const double width = (hi - lo) / static_cast<double>(n);
  const double mass = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    cells[i].left = i == 0 ? lo : cells[i - 1].right;
    cells[i].right = i + 1 == n ? hi : lo + width * static_cast<double>(i + 1);
    cells[i].weight = mass;
  }
  return AdaptiveGrid(std::move(cells));
}

namespace {

// Three-point first derivative on non-uniform nodes; exact for quadratics.
std::vector<double> divided_derivative(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  {
    const double h1 = x[1] - x[0];
    const double h2 = x[2] - x[1];
    d[0] = -f[0] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) + f[1] * (h1 + h2) / (h1 * h2) -
           f[2] * h1 / (h2 * (h1 + h2));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1];
    const double h2 = x[i + 1] - x[i];
    d[i] = -f[i - 1] * h2 / (h1 * (h1 + h2)) + f[i] * (h2 - h1) / (h1 * h2) +
           f[i + 1] * h1 / (h2 * (h1 + h2));
  }
  {
    const double h1 = x[n - 2] - x[n - 3];
    const double h2 = x[n - 1] - x[n - 2];
    d[n - 1] = f[n - 3] * h2 / (h1 * (h1 + h2)) - f[n - 2] * (h1 + h2) / (h1 * h2) +
               f[n - 1] * (h1 + 2.0 * h2) / (h2 * (h1 + h2));
  }
  return d;
}

// A split needs both children to keep their centroid strictly inside, so
// centroids stay strictly increasing at floating-point resolution.
bool splittable(const GridCell& c, double min_width) {
  if (!(0.5 * c.width() >= min_width)) return false;
  const double mid = c.centroid();
  if (!(c.left < mid && mid < c.right)) return false;
  const double lc = 0.5 * (c.left + mid);
  const double rc = 0.5 * (mid + c.right);
  return c.left < lc && lc < mid && mid < rc && rc < c.right;
}

void split_into(std::vector<GridCell>& out, const GridCell& c) {
  const double mid = c.centroid();
  const double half = 0.5 * c.weight;
  out.push_back({c.left, mid, half});
  out.push_back({mid, c.right, half});
}

}  // namespace

std::vector<double> error_density(const AdaptiveGrid& grid) {
  const std::size_t n = grid.size();
  if (n < 3) {
    throw std::invalid_argument("error_density needs at least 3 cells");
  }
  std::vector<double> x(n);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = grid[i].centroid();
    f[i] = x[i] * grid[i].weight;
  }
  const std::vector<double> second = divided_derivative(x, divided_derivative(x, f));
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = grid[i].width();
    e[i] = std::abs(second[i]) * l * l;
    if (std::isnan(e[i])) e[i] = std::numeric_limits<double>::infinity();
  }
  return e;
}

namespace {

// One refinement pass; returns whether anything was split. parent maps the
// new cells back to the cells of `grid`.
bool refine_once(const AdaptiveGrid& grid, double e_th, double min_width,
                 std::vector<GridCell>& out, std::vector<std::size_t>& parent) {
  out.clear();
  parent.clear();
  out.reserve(2 * grid.size());
  parent.reserve(2 * grid.size());
  // Below three cells there is no stencil; subdivide everything to rebuild one.
  const std::vector<double> e =
      grid.size() < 3 ? std::vector<double>(grid.size(), std::numeric_limits<double>::infinity())
                      : error_density(grid);
  bool changed = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GridCell& c = grid[i];
    if (e[i] > e_th && splittable(c, min_width)) {
      split_into(out, c);
      parent.push_back(i);
      parent.push_back(i);
      changed = true;
    } else {
      out.push_back(c);
      parent.push_back(i);
    }
  }
  return changed;
}

}  // namespace

TrackedRefine refine_tracked(const AdaptiveGrid& grid, double e_th,
                             const RefineOptions& options) {
  if (!(e_th > 0.0)) {
    throw std::invalid_argument("refinement threshold must be positive");
  }
  std::vector<GridCell> cells;
  std::vector<std::size_t> step_parent;
  bool changed = refine_once(grid, e_th, options.min_width, cells, step_parent);
  TrackedRefine result{AdaptiveGrid(cells), step_parent};
  for (std::size_t pass = 1; options.multi_pass && changed && pass < options.max_passes; ++pass) {
    changed = refine_once(result.grid, e_th, options.min_width, cells, step_parent);
    for (std::size_t& p : step_parent) p = result.parent[p];
    result.grid = AdaptiveGrid(cells);
    result.parent = step_parent;
  }
  return result;
}

AdaptiveGrid refine(const AdaptiveGrid& grid, double e_th, const RefineOptions& options) {
  return refine_tracked(grid, e_th, options).grid;
}

TrackedMerge merge_tracked(const AdaptiveGrid& grid, double w_th) {
  if (!(w_th > 0.0)) {
    throw std::invalid_argument("merge threshold must be positive");
  }
  const auto cells = grid.cells();
  std::vector<GridCell> out;
  std::vector<std::pair<std::size_t, std::size_t>> sources;
  out.reserve(cells.size());
  sources.reserve(cells.size());
  GridCell current = cells.front();
  std::size_t first = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const GridCell& next = cells[i];
    if (std::max(current.weight, next.weight) < w_th) {
      current = {current.left, next.right, current.weight + next.weight};
    } else {
      out.push_back(current);
      sources.emplace_back(first, i);
      current = next;
      first = i;
    }
  }
  out.push_back(current);
  sources.emplace_back(first, cells.size());
  return {AdaptiveGrid(std::move(out)), std::move(sources)};
}

AdaptiveGrid merge(const AdaptiveGrid& grid, double w_th) {
  return merge_tracked(grid, w_th).grid;
}

AdaptiveGrid normalize(const AdaptiveGrid& grid) {
  const double total = grid.total_weight();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegeneratePosterior("grid weights sum to " + std::to_string(total));
  }
  std::vector<GridCell> cells(grid.cells().begin(), grid.cells().end());
  for (GridCell& c : cells) c.weight /= total;
  return AdaptiveGrid(std::move(cells));
}

double midpoint_integral(const std::function<double(double)>& f, double lo, double hi,
                         std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("midpoint rule needs at least one interval");
  }
  const double span = hi - lo;
  const double nn = static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    sum += f(lo + (2.0 * static_cast<double>(k) - 1.0) * span / (2.0 * nn));
  }
  return span / nn * sum;
}

double midpoint_error_bound(double k2, double lo, double hi, std::size_t n) {
  const double span = hi - lo;
  const double nn = static_cast<double>(n);
  return k2 * span * span * span / (24.0 * nn * nn);
}

void write_snapshot_csv(std::ostream& out, std::size_t experiment_index, const AdaptiveGrid& grid,
                        bool write_header) {
  if (write_header) {
    out << "experiment_index,cell_left,cell_centroid,cell_right,weight\n";
  }
  const auto old_precision = out.precision(17);
  for (const GridCell& c : grid.cells()) {
    out << experiment_index << ',' << c.left << ',' << c.centroid() << ',' << c.right << ','
        << c.weight << '\n';
  }
  out.precision(old_precision);
}

}  // namespace phasegrid
