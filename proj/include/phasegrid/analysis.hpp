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

#ifndef PHASEGRID_ANALYSIS_HPP
#define PHASEGRID_ANALYSIS_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "phasegrid/filters.hpp"
#include "phasegrid/smc.hpp"

namespace phasegrid {

/// Sample median; the mean of the two middle values for even counts.
/// Throws std::invalid_argument on empty input.
double median(std::vector<double> values);

/// Nearest-rank percentile: the value of rank ceil(p n / 100) in sorted
/// order (rank 1 for p = 0). p must lie in [0, 100].
double nearest_rank_percentile(std::vector<double> values, double p);

/// Element k is the median over trials of the absolute error after
/// experiment k. Throws std::invalid_argument if the traces differ in length.
std::vector<double> median_error_curve(std::span<const TrialTrace> traces);

/// One row of median_error.csv.
struct CurveRow {
  std::size_t experiment = 0;
  double median_abs_error = 0.0;
  double q25_error = 0.0;  // nearest rank
  double q75_error = 0.0;  // nearest rank
  double median_cell_count = 0.0;
};

std::vector<CurveRow> error_curve_table(std::span<const TrialTrace> traces);

struct CellPercentiles {
  double q2_5 = 0.0;
  double q50 = 0.0;
  double q97_5 = 0.0;
};

/// 2.5th, 50th and 97.5th nearest-rank percentiles of final cell counts.
CellPercentiles cell_count_percentiles(std::span<const std::size_t> final_counts);

/// Batch aggregate written to summary.json.
struct RunSummary {
  std::vector<double> median_error;
  CellPercentiles percentiles_cells;
  std::vector<std::size_t> final_cell_counts;
  std::size_t n_trials = 0;
  std::size_t failure_count = 0;
  std::vector<std::size_t> failed_trials;
  // Hybrid runs only; empty otherwise.
  std::vector<double> median_theta_rel_error;
};

RunSummary summarize(std::span<const TrialTrace> traces, bool with_theta = false);

/// Principal kurtosis analysis of a weighted ensemble.
///
/// B = sum_j w_j ((x_j - mu)^T Sigma^{-1} (x_j - mu)) (x_j - mu)(x_j - mu)^T,
/// symmetrized. For a Gaussian B = (D + 2) Sigma. Eigenvalues are sorted in
/// descending order with matching orthonormal eigenvector columns.
struct KurtosisReport {
  Eigen::MatrixXd B;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd selected_axis;  // leading eigenvector
};

/// Throws SingularCovariance when the covariance stays singular after adding
/// 1e-12 * trace to its diagonal.
KurtosisReport kurtosis_matrix(const ParticleEnsemble& ens);

/// Coordinate axis with the largest |component| of the leading principal
/// kurtosis direction. Returns 0 for D = 1 and when the leading eigenvalue is
/// degenerate (no preferred direction); remaining ties go to the lowest index.
std::size_t select_grid_axis(const ParticleEnsemble& ens);

}  // namespace phasegrid

#endif  // PHASEGRID_ANALYSIS_HPP
