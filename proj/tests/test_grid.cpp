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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "phasegrid/errors.hpp"
#include "phasegrid/grid.hpp"
#include "phasegrid/rng.hpp"

namespace {

using phasegrid::AdaptiveGrid;
using phasegrid::GridCell;
using phasegrid::Rng;

// Random contiguous grid on [lo, hi] with n cells of random widths and
// random (unnormalized) weights.
AdaptiveGrid random_grid(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::vector<double> cuts(n - 1);
  for (double& c : cuts) c = rng.uniform(lo, hi);
  std::sort(cuts.begin(), cuts.end());
  std::vector<GridCell> cells(n);
  double left = lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double right = i + 1 == n ? hi : cuts[i];
    cells[i] = {left, right, rng.uniform()};
    left = right;
  }
  // Degenerate draws (equal cuts) are vanishingly rare; retry if they happen.
  for (const GridCell& c : cells) {
    if (!(c.left < c.right)) return random_grid(rng, n, lo, hi);
  }
  return AdaptiveGrid(cells);
}

double total(const AdaptiveGrid& g) {
  double s = 0.0;
  for (const GridCell& c : g.cells()) s += c.weight;
  return s;
}

double first_moment(const AdaptiveGrid& g) {
  double s = 0.0;
  for (const GridCell& c : g.cells()) s += 0.5 * (c.left + c.right) * c.weight;
  return s;
}

void expect_contiguous(const AdaptiveGrid& g) {
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    ASSERT_EQ(g[i].right, g[i + 1].left);
    ASSERT_LT(g[i].centroid(), g[i + 1].centroid());
  }
}

TEST(UniformGrid, FourCells) {
  const AdaptiveGrid g = phasegrid::uniform_grid(0.0, 1.0, 4);
  ASSERT_EQ(g.size(), 4u);
  const double centroids[] = {0.125, 0.375, 0.625, 0.875};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(g[i].centroid(), centroids[i]);
    EXPECT_EQ(g[i].weight, 0.25);
  }
}

TEST(UniformGrid, RejectsTooFewCells) {
  EXPECT_THROW(phasegrid::uniform_grid(-1.0, 1.0, 2), std::invalid_argument);
  EXPECT_THROW(phasegrid::uniform_grid(1.0, 1.0, 5), std::invalid_argument);
}

TEST(UniformGrid, HundredCells) {
  const AdaptiveGrid g = phasegrid::uniform_grid(0.0, 1.0, 100);
  EXPECT_NEAR(g.total_weight(), 1.0, 1e-15);
  for (const GridCell& c : g.cells()) EXPECT_NEAR(c.width(), 0.01, 1e-15);
  EXPECT_EQ(g.domain_lo(), 0.0);
  EXPECT_EQ(g.domain_hi(), 1.0);
}

TEST(AdaptiveGrid, ConstructorChecksInvariants) {
  EXPECT_THROW(AdaptiveGrid({}), std::invalid_argument);
  EXPECT_THROW(AdaptiveGrid({{0.0, 0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(AdaptiveGrid({{0.0, 1.0, -0.1}}), std::invalid_argument);
  EXPECT_THROW(AdaptiveGrid({{0.0, 1.0, 0.5}, {1.1, 2.0, 0.5}}), std::invalid_argument);
}

TEST(ErrorDensity, LinearIsZero) {
  const AdaptiveGrid g = phasegrid::uniform_grid(0.0, 1.0, 20);
  for (double e : phasegrid::error_density(g)) EXPECT_NEAR(e, 0.0, 1e-10);
}

TEST(ErrorDensity, QuadraticMatchesAnalyticSecondDerivative) {
  // w_i = c * omega_i makes f = c * omega^2, so f'' = 2c everywhere.
  const double c = 3.0;
  const AdaptiveGrid base = phasegrid::uniform_grid(0.0, 2.0, 16);
  std::vector<double> w(base.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = c * base[i].centroid();
  const AdaptiveGrid g = base.with_weights(w);
  const std::vector<double> e = phasegrid::error_density(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(e[i], 2.0 * c * g[i].width() * g[i].width(), 1e-10);
  }
}

TEST(ErrorDensity, ThreeCellsFinite) {
  const AdaptiveGrid g({{0.0, 0.2, 0.1}, {0.2, 0.7, 0.6}, {0.7, 1.0, 0.3}});
  const std::vector<double> e = phasegrid::error_density(g);
  ASSERT_EQ(e.size(), 3u);
  for (double v : e) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(phasegrid::error_density(AdaptiveGrid({{0.0, 1.0, 1.0}, {1.0, 2.0, 0.0}})),
               std::invalid_argument);
}

// Property: the stencils are exact for quadratics on any spacing.
TEST(ErrorDensityProperty, NonUniformQuadraticExact) {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng.bits() % 30;
    AdaptiveGrid g = random_grid(rng, n);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(0.1, 2.0);
    // f = omega * w = a omega^2 + b omega requires w = a omega + b >= 0.
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::abs(a) * g[i].centroid() + b;
    g = g.with_weights(w);
    const std::vector<double> e = phasegrid::error_density(g);
    for (std::size_t i = 0; i < n; ++i) {
      const double l = g[i].width();
      const double expected = 2.0 * std::abs(a) * l * l;
      EXPECT_NEAR(e[i], expected, 1e-7 * (1.0 + expected) + 1e-9);
    }
  }
}

TEST(Refine, SingleFlaggedCell) {
  const AdaptiveGrid g({{0.0, 1.0, 1.0}});
  const AdaptiveGrid r = phasegrid::refine(g, 1e-10);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].centroid(), 0.25);
  EXPECT_EQ(r[1].centroid(), 0.75);
  EXPECT_EQ(r[0].weight, 0.5);
  EXPECT_EQ(r[1].weight, 0.5);
}

TEST(Refine, NoFlagIsIdentity) {
  const AdaptiveGrid g = phasegrid::uniform_grid(0.0, 1.0, 10);
  EXPECT_EQ(phasegrid::refine(g, 1e-3), g);
}

TEST(Refine, SplitsOnlyFlaggedCellsOnce) {
  // Kink at cell 4 of a uniform grid; cells far from it see a linear f.
  const AdaptiveGrid base = phasegrid::uniform_grid(0.0, 1.0, 9);
  std::vector<double> w(9, 0.1);
  w[4] = 0.2;
  const AdaptiveGrid g = base.with_weights(w);
  const std::vector<double> e = phasegrid::error_density(g);
  const double e_th = 1e-6;
  const phasegrid::TrackedRefine r = phasegrid::refine_tracked(g, e_th);
  std::size_t expected = 0;
  for (double v : e) expected += v > e_th ? 2 : 1;
  ASSERT_EQ(r.grid.size(), expected);
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const GridCell& parent = g[r.parent[i]];
    if (e[r.parent[i]] > e_th) {
      EXPECT_EQ(r.grid[i].weight, parent.weight / 2);
      EXPECT_NEAR(r.grid[i].width(), parent.width() / 2, 1e-15);
    } else {
      EXPECT_EQ(r.grid[i].weight, parent.weight);
      EXPECT_EQ(r.grid[i].left, parent.left);
    }
  }
}

TEST(Refine, MultiPassKeepsSplitting) {
  const AdaptiveGrid g({{0.0, 1.0, 1.0}});
  phasegrid::RefineOptions opt;
  opt.multi_pass = true;
  opt.max_passes = 4;
  // Grids below three cells have no stencil and split every cell, so the
  // second pass runs as well.
  const AdaptiveGrid r = phasegrid::refine(g, 1e-300, opt);
  EXPECT_GT(r.size(), 2u);
  EXPECT_NEAR(r.total_weight(), 1.0, 1e-15);
}

TEST(Refine, RespectsMinimumWidth) {
  const AdaptiveGrid g({{0.0, 1e-3, 1.0}});
  phasegrid::RefineOptions opt;
  opt.min_width = 1e-3;
  EXPECT_EQ(phasegrid::refine(g, 1e-300, opt), g);
  EXPECT_THROW(phasegrid::refine(g, 0.0), std::invalid_argument);
}

// Independent reference for the merge sweep: the running output cell absorbs
// its right neighbour whenever both masses are below the threshold.
std::vector<GridCell> reference_merge(const std::vector<GridCell>& in, double w_th) {
  std::vector<GridCell> out;
  for (const GridCell& c : in) {
    if (!out.empty() && out.back().weight < w_th && c.weight < w_th) {
      out.back().right = c.right;
      out.back().weight += c.weight;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

TEST(Merge, PairBelowThreshold) {
  const AdaptiveGrid g({{0.0, 0.1, 1e-6}, {0.1, 0.3, 2e-6}, {0.3, 1.0, 1.0}});
  const AdaptiveGrid m = phasegrid::merge(g, 1e-5);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[0].weight, 3e-6);
  EXPECT_DOUBLE_EQ(m[0].centroid(), 0.15);
  EXPECT_EQ(m[1], g[2]) << "cell above threshold untouched";
}

TEST(Merge, AllAboveThresholdUnchanged) {
  const AdaptiveGrid g = phasegrid::uniform_grid(0.0, 1.0, 10);
  EXPECT_EQ(phasegrid::merge(g, 0.05), g);
}

TEST(Merge, ChainCollapsesInOneSweep) {
  std::vector<GridCell> cells;
  for (int i = 0; i < 5; ++i) cells.push_back({0.1 * i, 0.1 * (i + 1), 1e-4 * (i + 1)});
  cells.push_back({0.5, 1.0, 0.9});
  const phasegrid::TrackedMerge m = phasegrid::merge_tracked(AdaptiveGrid(cells), 1e-2);
  ASSERT_EQ(m.grid.size(), 2u);
  EXPECT_NEAR(m.grid[0].weight, 1.5e-3, 1e-18);
  EXPECT_EQ(m.grid[0].left, 0.0);
  EXPECT_EQ(m.grid[0].right, 0.5);
  EXPECT_EQ(m.sources[0], std::make_pair(std::size_t{0}, std::size_t{5}));
  EXPECT_EQ(m.sources[1], std::make_pair(std::size_t{5}, std::size_t{6}));
  const std::vector<GridCell> ref = reference_merge(cells, 1e-2);
  ASSERT_EQ(ref.size(), m.grid.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_EQ(ref[i].left, m.grid[i].left);
    EXPECT_EQ(ref[i].right, m.grid[i].right);
    EXPECT_EQ(ref[i].weight, m.grid[i].weight);
  }
}

TEST(MergeProperty, MatchesReferenceSweep) {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.bits() % 40;
    const AdaptiveGrid g = random_grid(rng, n);
    const double w_th = rng.uniform(0.0, 0.8);
    if (!(w_th > 0.0)) continue;
    const std::vector<GridCell> in(g.cells().begin(), g.cells().end());
    const std::vector<GridCell> ref = reference_merge(in, w_th);
    const AdaptiveGrid m = phasegrid::merge(g, w_th);
    ASSERT_EQ(m.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      ASSERT_EQ(m[i].left, ref[i].left);
      ASSERT_EQ(m[i].right, ref[i].right);
      ASSERT_EQ(m[i].weight, ref[i].weight);
    }
  }
}

TEST(Normalize, Examples) {
  const AdaptiveGrid a = phasegrid::normalize(AdaptiveGrid({{0.0, 1.0, 2.0}, {1.0, 2.0, 2.0}}));
  EXPECT_EQ(a[0].weight, 0.5);
  EXPECT_EQ(a[1].weight, 0.5);
  const AdaptiveGrid b = phasegrid::normalize(AdaptiveGrid({{0.0, 1.0, 0.0}, {1.0, 2.0, 3.0}}));
  EXPECT_EQ(b[0].weight, 0.0);
  EXPECT_EQ(b[1].weight, 1.0);
  EXPECT_THROW(phasegrid::normalize(AdaptiveGrid({{0.0, 1.0, 0.0}, {1.0, 2.0, 0.0}})),
               phasegrid::DegeneratePosterior);
}

// Property: refine keeps mass and first moment, merge keeps mass, both keep
// the mesh contiguous and sorted.
TEST(GridProperty, ConservationAndContiguity) {
  Rng rng(2718);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 3 + rng.bits() % 50;
    const AdaptiveGrid g = phasegrid::normalize(random_grid(rng, n, -1.0, 1.0));
    const double e_th = std::exp(rng.uniform(-25.0, 0.0));
    const AdaptiveGrid r = phasegrid::refine(g, e_th);
    EXPECT_NEAR(total(r), total(g), 1e-14);
    EXPECT_NEAR(first_moment(r), first_moment(g), 1e-12);
    expect_contiguous(r);
    const AdaptiveGrid m = phasegrid::merge(r, rng.uniform(1e-4, 0.2));
    EXPECT_NEAR(total(m), total(r), 1e-14);
    expect_contiguous(m);
    EXPECT_EQ(m.domain_lo(), g.domain_lo());
    EXPECT_EQ(m.domain_hi(), g.domain_hi());
  }
}

TEST(GridProperty, RefineIdempotentWhenNothingFlagged) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const AdaptiveGrid g = random_grid(rng, 3 + rng.bits() % 20);
    const std::vector<double> e = phasegrid::error_density(g);
    const double above = *std::max_element(e.begin(), e.end()) * 2.0 + 1e-300;
    EXPECT_EQ(phasegrid::refine(g, above), g);
  }
}

TEST(Midpoint, SquareSaturatesBound) {
  const double m = phasegrid::midpoint_integral([](double x) { return x * x; }, 0.0, 1.0, 1);
  EXPECT_DOUBLE_EQ(m, 0.25);
  EXPECT_NEAR(std::abs(m - 1.0 / 3.0), phasegrid::midpoint_error_bound(2.0, 0.0, 1.0, 1), 1e-15);
}

TEST(Midpoint, ConstantExact) {
  for (std::size_t n : {1u, 3u, 7u, 64u}) {
    EXPECT_NEAR(phasegrid::midpoint_integral([](double) { return 2.5; }, -1.0, 3.0, n), 10.0,
                1e-13);
  }
  EXPECT_THROW(phasegrid::midpoint_integral([](double) { return 1.0; }, 0.0, 1.0, 0),
               std::invalid_argument);
}

TEST(Midpoint, SineErrorShrinksFourfold) {
  double previous = 0.0;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    const double err = std::abs(
        phasegrid::midpoint_integral([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, n) -
        2.0);
    if (n > 1) {
      EXPECT_GE(previous / err, 3.9);
    }
    previous = err;
  }
}

TEST(Snapshot, CsvLayout) {
  std::ostringstream out;
  phasegrid::write_snapshot_csv(out, 7, AdaptiveGrid({{0.0, 0.5, 0.25}, {0.5, 1.0, 0.75}}));
  EXPECT_EQ(out.str(),
            "experiment_index,cell_left,cell_centroid,cell_right,weight\n"
            "7,0,0.25,0.5,0.25\n"
            "7,0.5,0.75,1,0.75\n");
}

}  // namespace
