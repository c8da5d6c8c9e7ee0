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

#include "phasegrid/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phasegrid/errors.hpp"

namespace phasegrid {

std::string to_string(Estimator e) {
  return e == Estimator::PosteriorMean ? "mean" : "max-density";
}

std::string to_string(Heuristic h) { return h == Heuristic::PghPair ? "pgh-pair" : "sigma"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "mean") return Estimator::PosteriorMean;
  if (name == "max-density" || name == "mle") return Estimator::MaxDensity;
  throw ConfigError("unknown estimator '" + name + "' (expected mean or max-density)");
}

Heuristic parse_heuristic(const std::string& name) {
  if (name == "pgh-pair" || name == "pgh") return Heuristic::PghPair;
  if (name == "sigma") return Heuristic::SigmaScaled;
  throw ConfigError("unknown heuristic '" + name + "' (expected pgh-pair or sigma)");
}

void FilterConfig::validate() const {
  if (!(prior_lo < prior_hi)) throw ConfigError("prior_lo must be below prior_hi");
  if (!(w_th > 0.0)) throw ConfigError("w_th must be positive");
  if (!(e_th > 0.0)) throw ConfigError("e_th must be positive");
  if (n_initial < 3) throw ConfigError("initial grid needs at least 3 cells");
  if (!(min_cell_fraction >= 0.0 && min_cell_fraction < 1.0)) {
    throw ConfigError("min_cell_fraction must lie in [0, 1)");
  }
  if (!(limits.t_min > 0.0 && limits.t_min <= limits.t_max)) {
    throw ConfigError("evolution time limits must satisfy 0 < t_min <= t_max");
  }
  if (!(theta_lo >= 0.0 && theta_lo < theta_hi)) {
    throw ConfigError("theta prior must satisfy 0 <= theta_lo < theta_hi");
  }
  try {
    resample.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RefineOptions FilterConfig::refine_options() const {
  RefineOptions options;
  options.multi_pass = multi_pass_refine;
  options.min_width = min_cell_fraction * (prior_hi - prior_lo);
  return options;
}

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments weighted_moments(std::span<const double> x, std::span<const double> w) {
  double total = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += w[i];
    mean += w[i] * x[i];
  }
  mean /= total;
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) var += w[i] * (x[i] - mean) * (x[i] - mean);
  return {mean, std::sqrt(var / total)};
}

constexpr double kCollapsedSpread = 1e-15;

ExperimentDesign pgh_support(std::span<const double> x, std::span<const double> w,
                             Heuristic heuristic, Rng& rng, const DesignLimits& limits) {
  const Moments m = weighted_moments(x, w);
  const ExperimentDesign collapsed{limits.t_max, m.mean};
  if (heuristic == Heuristic::SigmaScaled) {
    if (!(m.sd >= kCollapsedSpread)) return collapsed;
    return {std::clamp(1.26 / m.sd, limits.t_min, limits.t_max), m.mean};
  }

  const CategoricalSampler pick(w);
  const std::size_t first = pick(rng);
  const double rest = pick.total() - w[first];
  if (!(rest > 0.0)) return collapsed;
  // Second draw from the weights with `first` removed.
  const double u = rng.uniform() * rest;
  double running = 0.0;
  std::size_t second = first;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i == first || w[i] <= 0.0) continue;
    second = i;
    running += w[i];
    if (u < running) break;
  }
  if (second == first) return collapsed;
  const double spread = std::abs(x[first] - x[second]);
  if (!(spread >= kCollapsedSpread)) return collapsed;
  return {std::clamp(1.0 / spread, limits.t_min, limits.t_max), x[first]};
}

std::vector<double> centroids(const AdaptiveGrid& grid) {
  std::vector<double> x(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) x[i] = grid[i].centroid();
  return x;
}

std::vector<double> masses(const AdaptiveGrid& grid) {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) w[i] = grid[i].weight;
  return w;
}

std::vector<double> first_coordinates(const ParticleEnsemble& ens) {
  std::vector<double> x(ens.size());
  for (std::size_t j = 0; j < ens.size(); ++j) x[j] = ens.scalar(j);
  return x;
}

}  // namespace

ExperimentDesign pgh(const AdaptiveGrid& posterior, Heuristic heuristic, Rng& rng,
                     const DesignLimits& limits) {
  return pgh_support(centroids(posterior), masses(posterior), heuristic, rng, limits);
}

ExperimentDesign pgh(const ParticleEnsemble& posterior, Heuristic heuristic, Rng& rng,
                     const DesignLimits& limits) {
  return pgh_support(first_coordinates(posterior), posterior.weights(), heuristic, rng, limits);
}

double estimate(const AdaptiveGrid& posterior, Estimator estimator) {
  if (estimator == Estimator::PosteriorMean) {
    double sum = 0.0;
    for (const GridCell& c : posterior.cells()) sum += c.centroid() * c.weight;
    return sum;
  }
  std::size_t best = 0;
  double best_density = -1.0;
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const double density = posterior[i].weight / posterior[i].width();
    if (density > best_density) {
      best_density = density;
      best = i;
    }
  }
  return posterior[best].centroid();
}

double estimate(const ParticleEnsemble& posterior, Estimator estimator) {
  if (estimator == Estimator::PosteriorMean) {
    double sum = 0.0;
    for (std::size_t j = 0; j < posterior.size(); ++j) sum += posterior.scalar(j) * posterior.weights()[j];
    return sum;
  }
  const auto w = posterior.weights();
  const auto best = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
  return posterior.scalar(best);
}

double posterior_sd(const AdaptiveGrid& posterior) {
  return weighted_moments(centroids(posterior), masses(posterior)).sd;
}

AdaptiveGrid grid_filter_step(const AdaptiveGrid& grid, const LikelihoodModel& model, Outcome d,
                              const ExperimentDesign& design, const FilterConfig& cfg) {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    w[i] = grid[i].weight * model.probability(d, grid[i].centroid(), design);
  }
  const AdaptiveGrid updated = normalize(grid.with_weights(w));
  const AdaptiveGrid refined = refine(updated, cfg.e_th, cfg.refine_options());
  return normalize(merge(refined, cfg.w_th));
}

Rng filter_stream(const GroundTruth& truth) { return Rng::stream(truth.seed, 0); }

Rng outcome_stream(const GroundTruth& truth, std::size_t experiment) {
  return Rng::stream(mix_seed(truth.seed, 1), experiment);
}

namespace {

double phase_error(double estimate, double truth, const FilterConfig& cfg) {
  const double diff = std::abs(estimate - truth);
  if (!cfg.circular_error) return diff;
  const double period = cfg.prior_hi - cfg.prior_lo;
  const double wrapped = std::fmod(diff, period);
  return std::min(wrapped, period - wrapped);
}

// Repeats the last record for the experiments a failed trial did not run.
void pad_failed(TrialTrace& trace, std::size_t n_experiments) {
  TrialRecord last = trace.records.back();
  last.outcome = -1;
  last.evolution_time = 0.0;
  last.inversion_phase = 0.0;
  while (trace.records.size() <= n_experiments) {
    last.experiment = trace.records.size();
    trace.records.push_back(last);
  }
}

}  // namespace

TrialTrace run_grid_trial(const GroundTruth& truth, const LikelihoodModel& model,
                          const FilterConfig& cfg, std::span<const std::size_t> snapshot_at) {
  cfg.validate();
  if (model.kind() == LikelihoodModel::Kind::DephasingUnknown) {
    throw std::invalid_argument("grid trial needs a model with known dephasing");
  }
  const auto wants_snapshot = [&](std::size_t k) {
    return std::find(snapshot_at.begin(), snapshot_at.end(), k) != snapshot_at.end();
  };

  TrialTrace trace;
  trace.omega_true = truth.omega;
  trace.records.reserve(cfg.n_experiments + 1);

  AdaptiveGrid grid = uniform_grid(cfg.prior_lo, cfg.prior_hi, cfg.n_initial);
  Rng rng = filter_stream(truth);

  const auto record = [&](std::size_t k, const ExperimentDesign& design, int outcome) {
    TrialRecord r;
    r.experiment = k;
    r.evolution_time = design.evolution_time;
    r.inversion_phase = design.inversion_phase;
    r.outcome = outcome;
    r.estimate = estimate(grid, cfg.estimator);
    r.abs_error = phase_error(r.estimate, truth.omega, cfg);
    r.posterior_sd = posterior_sd(grid);
    r.support_size = grid.size();
    trace.records.push_back(r);
    if (wants_snapshot(k)) trace.snapshots.push_back({k, grid});
  };

  record(0, {0.0, 0.0}, -1);
  for (std::size_t k = 1; k <= cfg.n_experiments; ++k) {
    ExperimentDesign design = pgh(grid, cfg.heuristic, rng, cfg.limits);
    if (!cfg.use_inversion_phase) design.inversion_phase = 0.0;
    Rng outcome_rng = outcome_stream(truth, k);
    const Outcome d = simulate_outcome(truth, design, outcome_rng);
    try {
      grid = grid_filter_step(grid, model, d, design, cfg);
    } catch (const DegeneratePosterior&) {
      trace.failed = true;
      trace.failed_at = k;
      pad_failed(trace, cfg.n_experiments);
      break;
    }
    record(k, design, static_cast<int>(d));
  }
  return trace;
}

TrialTrace run_lw_trial(const GroundTruth& truth, const LikelihoodModel& model,
                        std::size_t n_particles, const FilterConfig& cfg) {
  cfg.validate();
  if (n_particles < 2) {
    throw std::invalid_argument("Liu-West trial needs at least 2 particles");
  }
  if (model.kind() == LikelihoodModel::Kind::DephasingUnknown) {
    throw std::invalid_argument("Liu-West trial needs a model with known dephasing");
  }
  TrialTrace trace;
  trace.omega_true = truth.omega;
  trace.records.reserve(cfg.n_experiments + 1);

  Rng rng = filter_stream(truth);
  std::vector<double> positions(n_particles);
  for (double& p : positions) p = rng.uniform(cfg.prior_lo, cfg.prior_hi);
  ParticleEnsemble ens = ParticleEnsemble::uniform(1, std::move(positions));

  const auto record = [&](std::size_t k, const ExperimentDesign& design, int outcome) {
    TrialRecord r;
    r.experiment = k;
    r.evolution_time = design.evolution_time;
    r.inversion_phase = design.inversion_phase;
    r.outcome = outcome;
    r.estimate = estimate(ens, cfg.estimator);
    r.abs_error = phase_error(r.estimate, truth.omega, cfg);
    r.posterior_sd = std::sqrt(ensemble_cov(ens)(0, 0));
    r.support_size = ens.size();
    trace.records.push_back(r);
  };

  record(0, {0.0, 0.0}, -1);
  std::vector<double> likelihoods(n_particles);
  for (std::size_t k = 1; k <= cfg.n_experiments; ++k) {
    ExperimentDesign design = pgh(ens, cfg.heuristic, rng, cfg.limits);
    if (!cfg.use_inversion_phase) design.inversion_phase = 0.0;
    Rng outcome_rng = outcome_stream(truth, k);
    const Outcome d = simulate_outcome(truth, design, outcome_rng);
    for (std::size_t j = 0; j < ens.size(); ++j) {
      likelihoods[j] = model.probability(d, ens.scalar(j), design);
    }
    try {
      ens = update_weights(ens, likelihoods);
    } catch (const DegeneratePosterior&) {
      trace.failed = true;
      trace.failed_at = k;
      pad_failed(trace, cfg.n_experiments);
      break;
    }
    if (needs_resample(ens, cfg.resample)) {
      ens = liu_west_resample(ens, cfg.resample, rng);
    }
    record(k, design, static_cast<int>(d));
  }
  return trace;
}

Eigen::MatrixXd HybridState::joint_weights() const {
  const auto n1 = static_cast<Eigen::Index>(omega_grid.size());
  const auto n2 = static_cast<Eigen::Index>(particles_per_cell());
  Eigen::MatrixXd joint(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i) {
    const auto v = theta[static_cast<std::size_t>(i)].weights();
    for (Eigen::Index j = 0; j < n2; ++j) {
      joint(i, j) = omega_grid[static_cast<std::size_t>(i)].weight * v[static_cast<std::size_t>(j)];
    }
  }
  return joint;
}

double HybridState::omega_estimate(Estimator estimator) const {
  return estimate(omega_grid, estimator);
}

double HybridState::theta_estimate() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    double conditional = 0.0;
    for (std::size_t j = 0; j < theta[i].size(); ++j) {
      conditional += theta[i].weights()[j] * theta[i].scalar(j);
    }
    sum += omega_grid[i].weight * conditional;
  }
  return sum;
}

HybridState make_hybrid_state(const FilterConfig& cfg, std::size_t n1, std::size_t n2, Rng& rng) {
  if (n2 < 1) throw std::invalid_argument("hybrid filter needs at least one theta particle");
  HybridState state{uniform_grid(cfg.prior_lo, cfg.prior_hi, n1), {}};
  state.theta.reserve(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    std::vector<double> positions(n2);
    for (double& p : positions) p = rng.uniform(cfg.theta_lo, cfg.theta_hi);
    state.theta.push_back(ParticleEnsemble::uniform(1, std::move(positions)));
  }
  return state;
}

namespace {

// Liu-West noise can push a rate below zero; reflect it back.
ParticleEnsemble resample_rates(const ParticleEnsemble& ens, const ResampleConfig& cfg, Rng& rng,
                                std::size_t n_out) {
  ParticleEnsemble out = liu_west_resample(ens, cfg, rng, n_out);
  std::vector<double> positions(out.positions().begin(), out.positions().end());
  bool reflected = false;
  for (double& p : positions) {
    if (p < 0.0) {
      p = -p;
      reflected = true;
    }
  }
  if (!reflected) return out;
  return ParticleEnsemble(1, std::move(positions), {out.weights().begin(), out.weights().end()});
}

}  // namespace

HybridState hybrid_filter_step(const HybridState& state, Outcome d, const ExperimentDesign& design,
                               const FilterConfig& cfg, Rng& rng) {
  const std::size_t n1 = state.omega_grid.size();
  const std::size_t n2 = state.particles_per_cell();

  // Joint update w_ij <- w_ij P(d | omega_i, theta_ij), then split back into
  // the omega marginal and per-cell conditionals.
  std::vector<double> cell_mass(n1);
  std::vector<std::vector<double>> conditional(n1);
  double total = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    const double omega = state.omega_grid[i].centroid();
    const auto v = state.theta[i].weights();
    conditional[i].resize(v.size());
    double row = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double u = state.omega_grid[i].weight * v[j] *
                       likelihood_dephased_rate(d, omega, state.theta[i].scalar(j), design);
      conditional[i][j] = u;
      row += u;
    }
    cell_mass[i] = row;
    total += row;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegeneratePosterior("joint likelihood products vanished");
  }
  std::vector<ParticleEnsemble> theta;
  theta.reserve(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    if (cell_mass[i] > 0.0) {
      for (double& u : conditional[i]) u /= cell_mass[i];
      theta.push_back(state.theta[i].with_weights(std::move(conditional[i])));
    } else {
      theta.push_back(state.theta[i]);
    }
    cell_mass[i] /= total;
  }
  const AdaptiveGrid updated = normalize(state.omega_grid.with_weights(cell_mass));

  const TrackedRefine refined = refine_tracked(updated, cfg.e_th, cfg.refine_options());
  std::vector<ParticleEnsemble> refined_theta;
  refined_theta.reserve(refined.parent.size());
  for (std::size_t p : refined.parent) refined_theta.push_back(theta[p]);

  const TrackedMerge merged = merge_tracked(refined.grid, cfg.w_th);
  std::vector<ParticleEnsemble> merged_theta;
  merged_theta.reserve(merged.sources.size());
  for (const auto& [first, last] : merged.sources) {
    if (last - first == 1) {
      merged_theta.push_back(std::move(refined_theta[first]));
      continue;
    }
    double pooled_mass = 0.0;
    for (std::size_t c = first; c < last; ++c) pooled_mass += refined.grid[c].weight;
    std::vector<double> positions;
    std::vector<double> weights;
    for (std::size_t c = first; c < last; ++c) {
      const double scale = pooled_mass > 0.0 ? refined.grid[c].weight / pooled_mass
                                             : 1.0 / static_cast<double>(last - first);
      const ParticleEnsemble& src = refined_theta[c];
      positions.insert(positions.end(), src.positions().begin(), src.positions().end());
      for (double v : src.weights()) weights.push_back(scale * v);
    }
    const ParticleEnsemble pooled(1, std::move(positions), std::move(weights));
    merged_theta.push_back(resample_rates(pooled, cfg.resample, rng, n2));
  }

  for (ParticleEnsemble& ens : merged_theta) {
    if (needs_resample(ens, cfg.resample)) ens = resample_rates(ens, cfg.resample, rng, n2);
  }
  return {normalize(merged.grid), std::move(merged_theta)};
}

TrialTrace run_hybrid_trial(const GroundTruth& truth, const FilterConfig& cfg, std::size_t n1,
                            std::size_t n2) {
  cfg.validate();
  const double theta_true = std::isinf(truth.t2) ? 0.0 : 1.0 / truth.t2;

  TrialTrace trace;
  trace.omega_true = truth.omega;
  trace.records.reserve(cfg.n_experiments + 1);

  Rng rng = filter_stream(truth);
  HybridState state = make_hybrid_state(cfg, n1, n2, rng);

  const auto record = [&](std::size_t k, const ExperimentDesign& design, int outcome) {
    TrialRecord r;
    r.experiment = k;
    r.evolution_time = design.evolution_time;
    r.inversion_phase = design.inversion_phase;
    r.outcome = outcome;
    r.estimate = state.omega_estimate(cfg.estimator);
    r.abs_error = phase_error(r.estimate, truth.omega, cfg);
    r.theta_estimate = state.theta_estimate();
    r.theta_rel_error = theta_true > 0.0 ? std::abs(r.theta_estimate - theta_true) / theta_true
                                         : std::abs(r.theta_estimate);
    r.posterior_sd = posterior_sd(state.omega_grid);
    r.support_size = state.omega_grid.size();
    trace.records.push_back(r);
  };

  record(0, {0.0, 0.0}, -1);
  for (std::size_t k = 1; k <= cfg.n_experiments; ++k) {
    ExperimentDesign design = pgh(state.omega_grid, cfg.heuristic, rng, cfg.limits);
    if (!cfg.use_inversion_phase) design.inversion_phase = 0.0;
    Rng outcome_rng = outcome_stream(truth, k);
    const Outcome d = simulate_outcome(truth, design, outcome_rng);
    try {
      state = hybrid_filter_step(state, d, design, cfg, rng);
    } catch (const DegeneratePosterior&) {
      trace.failed = true;
      trace.failed_at = k;
      pad_failed(trace, cfg.n_experiments);
      break;
    }
    record(k, design, static_cast<int>(d));
  }
  return trace;
}

}  // namespace phasegrid
