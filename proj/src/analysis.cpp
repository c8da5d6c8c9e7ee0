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

#include "phasegrid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phasegrid/errors.hpp"

namespace phasegrid {

double median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median of an empty sample");
  }
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile of an empty sample");
  }
  if (!(p >= 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile must lie in [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // The small slack keeps exact products such as 2.5 * 1000 / 100 from
  // rounding up to the next rank.
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

namespace {

void check_aligned(std::span<const TrialTrace> traces) {
  if (traces.empty()) {
    throw std::invalid_argument("no traces to aggregate");
  }
  const std::size_t len = traces.front().records.size();
  for (const TrialTrace& t : traces) {
    if (t.records.size() != len) {
      throw std::invalid_argument("traces have different lengths");
    }
  }
}

std::vector<double> column(std::span<const TrialTrace> traces, std::size_t k,
                           double TrialRecord::*field) {
  std::vector<double> v;
  v.reserve(traces.size());
  for (const TrialTrace& t : traces) v.push_back(t.records[k].*field);
  return v;
}

}  // namespace

std::vector<double> median_error_curve(std::span<const TrialTrace> traces) {
  check_aligned(traces);
  std::vector<double> curve(traces.front().records.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    curve[k] = median(column(traces, k, &TrialRecord::abs_error));
  }
  return curve;
}

std::vector<CurveRow> error_curve_table(std::span<const TrialTrace> traces) {
  check_aligned(traces);
  std::vector<CurveRow> rows(traces.front().records.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::vector<double> err = column(traces, k, &TrialRecord::abs_error);
    std::vector<double> cells;
    cells.reserve(traces.size());
    for (const TrialTrace& t : traces) {
      cells.push_back(static_cast<double>(t.records[k].support_size));
    }
    rows[k] = {k, median(err), nearest_rank_percentile(err, 25.0),
               nearest_rank_percentile(err, 75.0), median(std::move(cells))};
  }
  return rows;
}

CellPercentiles cell_count_percentiles(std::span<const std::size_t> final_counts) {
  if (final_counts.empty()) {
    throw std::invalid_argument("no cell counts");
  }
  const std::vector<double> v(final_counts.begin(), final_counts.end());
  return {nearest_rank_percentile(v, 2.5), nearest_rank_percentile(v, 50.0),
          nearest_rank_percentile(v, 97.5)};
}

RunSummary summarize(std::span<const TrialTrace> traces, bool with_theta) {
  check_aligned(traces);
  RunSummary s;
  s.n_trials = traces.size();
  s.median_error = median_error_curve(traces);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    s.final_cell_counts.push_back(traces[i].final_support());
    if (traces[i].failed) {
      ++s.failure_count;
      s.failed_trials.push_back(i);
    }
  }
  s.percentiles_cells = cell_count_percentiles(s.final_cell_counts);
  if (with_theta) {
    for (std::size_t k = 0; k < s.median_error.size(); ++k) {
      s.median_theta_rel_error.push_back(median(column(traces, k, &TrialRecord::theta_rel_error)));
    }
  }
  return s;
}

KurtosisReport kurtosis_matrix(const ParticleEnsemble& ens) {
  const auto d = static_cast<Eigen::Index>(ens.dim());
  const Eigen::VectorXd mu = ensemble_mean(ens);
  Eigen::MatrixXd cov = ensemble_cov(ens);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0)) {
    const double trace = cov.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) {
      throw SingularCovariance("ensemble covariance has zero trace");
    }
    cov.diagonal().array() += 1e-12 * trace;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      throw SingularCovariance("covariance not positive definite after regularization");
    }
  }

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd diff(d);
  for (std::size_t j = 0; j < ens.size(); ++j) {
    const auto x = ens.position(j);
    for (Eigen::Index k = 0; k < d; ++k) diff[k] = x[static_cast<std::size_t>(k)] - mu[k];
    const double r2 = diff.dot(llt.solve(diff));
    B.noalias() += ens.weights()[j] * r2 * diff * diff.transpose();
  }
  B = 0.5 * (B + B.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  if (eig.info() != Eigen::Success) {
    throw SingularCovariance("kurtosis matrix eigendecomposition failed");
  }
  KurtosisReport report;
  report.B = B;
  // Eigen returns ascending order.
  report.eigenvalues = eig.eigenvalues().reverse();
  report.eigenvectors = eig.eigenvectors().rowwise().reverse();
  report.selected_axis = report.eigenvectors.col(0);
  return report;
}

std::size_t select_grid_axis(const ParticleEnsemble& ens) {
  if (ens.dim() == 1) return 0;
  const KurtosisReport r = kurtosis_matrix(ens);
  const Eigen::Index d = r.eigenvalues.size();
  const double lead = r.eigenvalues[0];
  const double tol = 1e-9 * std::max(std::abs(lead), 1e-300);

  // Squared projection of each coordinate axis onto the leading eigenspace;
  // with a simple leading eigenvalue this is the squared component.
  Eigen::VectorXd score = Eigen::VectorXd::Zero(d);
  Eigen::Index multiplicity = 0;
  for (Eigen::Index c = 0; c < d && lead - r.eigenvalues[c] <= tol; ++c) {
    score += r.eigenvectors.col(c).cwiseAbs2();
    ++multiplicity;
  }
  if (multiplicity == d) return 0;

  std::size_t best = 0;
  for (Eigen::Index k = 1; k < d; ++k) {
    if (score[k] > score[static_cast<Eigen::Index>(best)] + 1e-12) best = static_cast<std::size_t>(k);
  }
  return best;
}

}  // namespace phasegrid
