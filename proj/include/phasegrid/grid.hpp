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

#ifndef PHASEGRID_GRID_HPP
#define PHASEGRID_GRID_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace phasegrid {

/// One mesh element carrying probability mass. The centroid is always the
/// midpoint of [left, right].
struct GridCell {
  double left = 0.0;
  double right = 0.0;
  double weight = 0.0;

  double centroid() const noexcept { return 0.5 * (left + right); }
  double width() const noexcept { return right - left; }

  bool operator==(const GridCell&) const = default;
};

/// Contiguous, ordered 1-D mesh representing a posterior as cell masses.
///
/// Invariants: at least one cell, every cell has left < right and
/// weight >= 0, and right_i == left_{i+1} exactly. The constructor checks all
/// of them; every operation below returns a new grid.
class AdaptiveGrid {
 public:
  explicit AdaptiveGrid(std::vector<GridCell> cells);

  std::span<const GridCell> cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  const GridCell& operator[](std::size_t i) const { return cells_[i]; }

  double domain_lo() const noexcept { return cells_.front().left; }
  double domain_hi() const noexcept { return cells_.back().right; }

  double total_weight() const noexcept;

  /// Copy of the grid with weights replaced; positions are untouched.
  AdaptiveGrid with_weights(std::span<const double> weights) const;

  bool operator==(const AdaptiveGrid&) const = default;

 private:
  std::vector<GridCell> cells_;
};

/// n equal-width cells on [lo, hi], each with weight 1/n. Requires n >= 3.
AdaptiveGrid uniform_grid(double lo, double hi, std::size_t n);

/// Per-cell midpoint-rule error density e_i = |f''_i| l_i^2 with f_i = omega_i w_i.
///
/// f' and f'' are taken by applying a three-point divided difference twice
/// over the centroids, using the actual neighbour spacings. Interior cells use
/// the centred stencil and the two end cells a one-sided second-order
/// stencil. On a uniform grid the interior reduces to
/// f'_i = (f_{i+1} - f_{i-1}) / 2l, f''_i = (f'_{i+1} - f'_{i-1}) / 2l.
std::vector<double> error_density(const AdaptiveGrid& grid);

struct RefineOptions {
  bool multi_pass = false;
  std::size_t max_passes = 32;
  /// Cells are never split into children narrower than this. Zero still
  /// stops at floating-point resolution.
  double min_width = 0.0;
};

/// Splits every cell whose error density exceeds e_th into two half-width
/// children carrying half the mass each. One pass by default; with
/// multi_pass the split repeats (error densities recomputed each pass) until
/// no cell is flagged or max_passes is reached. Grids with fewer than three
/// cells have no error estimate, so all their cells are split.
AdaptiveGrid refine(const AdaptiveGrid& grid, double e_th, const RefineOptions& options = {});

/// Refinement result that also records, for every output cell, the index of
/// the input cell it came from.
struct TrackedRefine {
  AdaptiveGrid grid;
  std::vector<std::size_t> parent;
};

TrackedRefine refine_tracked(const AdaptiveGrid& grid, double e_th,
                             const RefineOptions& options = {});

/// Left-to-right sweep joining adjacent cells whose masses are both below
/// w_th. A merged cell can keep absorbing its right neighbour in the same
/// sweep while the criterion holds.
AdaptiveGrid merge(const AdaptiveGrid& grid, double w_th);

/// Merge result with, for every output cell, the half-open range
/// [first, last) of input cells it absorbed.
struct TrackedMerge {
  AdaptiveGrid grid;
  std::vector<std::pair<std::size_t, std::size_t>> sources;
};

TrackedMerge merge_tracked(const AdaptiveGrid& grid, double w_th);

/// Divides all masses by their sum. Throws DegeneratePosterior if the sum is
/// zero or not finite.
AdaptiveGrid normalize(const AdaptiveGrid& grid);

/// Composite midpoint rule with n equal intervals on [lo, hi].
double midpoint_integral(const std::function<double(double)>& f, double lo, double hi,
                         std::size_t n);

/// Upper bound K2 (b - a)^3 / (24 n^2) on the composite midpoint error.
double midpoint_error_bound(double k2, double lo, double hi, std::size_t n);

/// Writes one CSV row per cell: experiment_index,cell_left,cell_centroid,cell_right,weight.
/// The header is written only when write_header is set.
void write_snapshot_csv(std::ostream& out, std::size_t experiment_index, const AdaptiveGrid& grid,
                        bool write_header = true);

}  // namespace phasegrid

#endif  // PHASEGRID_GRID_HPP
