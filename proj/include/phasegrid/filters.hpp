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

#ifndef PHASEGRID_FILTERS_HPP
#define PHASEGRID_FILTERS_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phasegrid/grid.hpp"
#include "phasegrid/likelihood.hpp"
#include "phasegrid/rng.hpp"
#include "phasegrid/smc.hpp"

namespace phasegrid {

enum class Estimator { PosteriorMean, MaxDensity };
enum class Heuristic { PghPair, SigmaScaled };

std::string to_string(Estimator e);
std::string to_string(Heuristic h);
Estimator parse_estimator(const std::string& name);
Heuristic parse_heuristic(const std::string& name);

/// Clamp range for the evolution time chosen by the experiment heuristic.
struct DesignLimits {
  double t_min = 1e-3;
  double t_max = 1e14;
};

struct FilterConfig {
  double prior_lo = 0.0;
  double prior_hi = 1.0;
  double w_th = 1e-3;   // merge threshold
  double e_th = 1e-10;  // refine threshold
  std::size_t n_initial = 100;
  std::size_t n_experiments = 1000;
  ResampleConfig resample;
  Estimator estimator = Estimator::PosteriorMean;
  Heuristic heuristic = Heuristic::PghPair;
  bool multi_pass_refine = false;
  // Smallest cell width produced by refinement, relative to the prior width.
  double min_cell_fraction = 5e-16;
  bool circular_error = false;  // distance modulo the prior width
  // When false every design uses x = 0, so the likelihood is even in omega.
  bool use_inversion_phase = true;
  DesignLimits limits;
  // Uniform prior on the dephasing rate theta = 1/T2 (hybrid filter only).
  double theta_lo = 0.0;
  double theta_hi = 1.0;

  void validate() const;
  RefineOptions refine_options() const;
};

/// Particle guess heuristic on a grid posterior (support points are the cell
/// centroids weighted by cell mass).
///
/// PghPair draws two distinct support points by weight and returns
/// t = 1/|w1 - w2|, x = w1. SigmaScaled returns t = 1.26/sigma, x = mu.
/// Both clamp t to the limits. When the posterior has collapsed (one support
/// point with mass, or spread below 1e-15) the result is t = t_max, x = mu.
ExperimentDesign pgh(const AdaptiveGrid& posterior, Heuristic heuristic, Rng& rng,
                     const DesignLimits& limits = {});

/// Same heuristic on the first coordinate of a particle ensemble.
ExperimentDesign pgh(const ParticleEnsemble& posterior, Heuristic heuristic, Rng& rng,
                     const DesignLimits& limits = {});

/// Point estimate of the phase. MaxDensity picks the cell with the largest
/// mass per unit width.
double estimate(const AdaptiveGrid& posterior, Estimator estimator);
/// MaxDensity picks the largest-weight particle (first on ties).
double estimate(const ParticleEnsemble& posterior, Estimator estimator);

/// Weighted standard deviation of the cell centroids.
double posterior_sd(const AdaptiveGrid& posterior);

/// One Bayes update followed by refine and merge: reweight by the likelihood
/// at each centroid, normalize, refine(e_th), merge(w_th), normalize.
/// The model must be Ideal or DephasingKnown.
AdaptiveGrid grid_filter_step(const AdaptiveGrid& grid, const LikelihoodModel& model, Outcome d,
                              const ExperimentDesign& design, const FilterConfig& cfg);

struct TrialRecord {
  std::size_t experiment = 0;
  double evolution_time = 0.0;
  double inversion_phase = 0.0;
  int outcome = -1;  // -1 for the prior record and for records after a failure
  double estimate = 0.0;
  double abs_error = 0.0;
  double theta_estimate = 0.0;   // hybrid only
  double theta_rel_error = 0.0;  // hybrid only
  double posterior_sd = 0.0;
  std::size_t support_size = 0;  // cells or particles
};

struct GridSnapshot {
  std::size_t experiment = 0;
  AdaptiveGrid grid;
};

/// Per-experiment history of one trial. records[0] is the prior estimate,
/// records[k] the state after experiment k. A trial whose posterior
/// degenerates is marked failed; its remaining records repeat the last
/// estimate so traces of one batch stay aligned.
struct TrialTrace {
  double omega_true = 0.0;
  std::vector<TrialRecord> records;
  std::vector<GridSnapshot> snapshots;
  bool failed = false;
  std::size_t failed_at = 0;

  double final_error() const { return records.back().abs_error; }
  std::size_t final_support() const { return records.back().support_size; }
};

/// Seed streams used inside a trial; exposed so tests can replay outcomes.
Rng filter_stream(const GroundTruth& truth);
Rng outcome_stream(const GroundTruth& truth, std::size_t experiment);

/// Adaptive-grid particle filter over n_experiments simulated experiments.
TrialTrace run_grid_trial(const GroundTruth& truth, const LikelihoodModel& model,
                          const FilterConfig& cfg, std::span<const std::size_t> snapshot_at = {});

/// Liu-West SMC baseline; particles start i.i.d. uniform on the prior.
TrialTrace run_lw_trial(const GroundTruth& truth, const LikelihoodModel& model,
                        std::size_t n_particles, const FilterConfig& cfg);

/// Joint posterior over (omega, theta): an adaptive grid in omega and, for
/// every cell, a conditional particle ensemble over theta. The joint weight
/// of (i, j) is grid[i].weight * theta[i].weights()[j].
struct HybridState {
  AdaptiveGrid omega_grid;
  std::vector<ParticleEnsemble> theta;

  Eigen::MatrixXd joint_weights() const;
  double omega_estimate(Estimator estimator) const;
  double theta_estimate() const;
  std::size_t particles_per_cell() const { return theta.front().size(); }
};

/// Uniform omega grid with n1 cells; each cell gets n2 theta particles drawn
/// i.i.d. from U[theta_lo, theta_hi].
HybridState make_hybrid_state(const FilterConfig& cfg, std::size_t n1, std::size_t n2, Rng& rng);

/// Joint Bayes update with the dephasing likelihood (T2 = 1/theta), then
/// refine/merge on the omega grid. Split children copy the parent's theta
/// ensemble; merged cells pool their ensembles (weights scaled by cell mass)
/// and Liu-West resample back to n2 particles. Each conditional ensemble is
/// also resampled when its ESS drops below the trigger.
HybridState hybrid_filter_step(const HybridState& state, Outcome d, const ExperimentDesign& design,
                               const FilterConfig& cfg, Rng& rng);

TrialTrace run_hybrid_trial(const GroundTruth& truth, const FilterConfig& cfg, std::size_t n1,
                            std::size_t n2);

}  // namespace phasegrid

#endif  // PHASEGRID_FILTERS_HPP
