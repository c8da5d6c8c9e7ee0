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

#include "phasegrid/smc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "phasegrid/errors.hpp"

namespace phasegrid {

ParticleEnsemble::ParticleEnsemble(std::size_t dim, std::vector<double> positions,
                                   std::vector<double> weights)
    : dim_(dim), positions_(std::move(positions)), weights_(std::move(weights)) {
  if (dim_ == 0) {
    throw std::invalid_argument("ensemble dimension must be at least 1");
  }
  if (weights_.empty()) {
    throw std::invalid_argument("ensemble needs at least one particle");
  }
  if (positions_.size() != weights_.size() * dim_) {
    throw std::invalid_argument("position count does not match weights x dim");
  }
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("particle weights must be non-negative");
  }
}

ParticleEnsemble ParticleEnsemble::uniform(std::size_t dim, std::vector<double> positions) {
  if (dim == 0 || positions.empty() || positions.size() % dim != 0) {
    throw std::invalid_argument("positions do not form whole particles");
  }
  const std::size_t n = positions.size() / dim;
  return ParticleEnsemble(dim, std::move(positions),
                          std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ParticleEnsemble ParticleEnsemble::with_weights(std::vector<double> weights) const {
  return ParticleEnsemble(dim_, positions_, std::move(weights));
}

void ResampleConfig::validate() const {
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("Liu-West parameter a must lie in (0, 1]");
  }
  if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) {
    throw std::invalid_argument("ESS threshold must lie in (0, 1]");
  }
}

CategoricalSampler::CategoricalSampler(std::span<const double> weights) {
  cumulative_.reserve(weights.size());
  double running = 0.0;
  for (double w : weights) {
    running += w;
    cumulative_.push_back(running);
  }
  if (!(total() > 0.0)) {
    throw DegeneratePosterior("categorical weights sum to zero");
  }
}

std::size_t CategoricalSampler::operator()(Rng& rng) const {
  const double u = rng.uniform() * total();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) {
    // u rounded up to the total; take the last entry with positive mass.
    it = std::lower_bound(cumulative_.begin(), cumulative_.end(), total());
  }
  return static_cast<std::size_t>(it - cumulative_.begin());
}

ParticleEnsemble update_weights(const ParticleEnsemble& ens, std::span<const double> likelihoods) {
  if (likelihoods.size() != ens.size()) {
    throw std::invalid_argument("likelihood count does not match particle count");
  }
  std::vector<double> w(ens.size());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = ens.weights()[j] * likelihoods[j];
    total += w[j];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegeneratePosterior("all particle likelihood products vanished");
  }
  for (double& x : w) x /= total;
  return ens.with_weights(std::move(w));
}

double effective_sample_size(const ParticleEnsemble& ens) {
  double sum_sq = 0.0;
  for (double w : ens.weights()) sum_sq += w * w;
  return 1.0 / sum_sq;
}

bool needs_resample(const ParticleEnsemble& ens, const ResampleConfig& cfg) {
  return effective_sample_size(ens) / static_cast<double>(ens.size()) < cfg.ess_threshold;
}

Eigen::VectorXd ensemble_mean(const ParticleEnsemble& ens) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ens.dim()));
  for (std::size_t j = 0; j < ens.size(); ++j) {
    const auto x = ens.position(j);
    for (std::size_t k = 0; k < ens.dim(); ++k) mu[static_cast<Eigen::Index>(k)] += ens.weights()[j] * x[k];
  }
  return mu;
}

Eigen::MatrixXd ensemble_cov(const ParticleEnsemble& ens) {
  const auto d = static_cast<Eigen::Index>(ens.dim());
  const Eigen::VectorXd mu = ensemble_mean(ens);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd diff(d);
  for (std::size_t j = 0; j < ens.size(); ++j) {
    const auto x = ens.position(j);
    for (Eigen::Index k = 0; k < d; ++k) diff[k] = x[static_cast<std::size_t>(k)] - mu[k];
    cov.noalias() += ens.weights()[j] * diff * diff.transpose();
  }
  return cov;
}

ParticleEnsemble liu_west_resample(const ParticleEnsemble& ens, const ResampleConfig& cfg, Rng& rng,
                                   std::size_t n_out) {
  cfg.validate();
  if (n_out == 0) n_out = ens.size();
  const std::size_t dim = ens.dim();
  const auto d = static_cast<Eigen::Index>(dim);

  const Eigen::VectorXd mu = ensemble_mean(ens);
  const double h2 = 1.0 - cfg.a * cfg.a;
  const Eigen::MatrixXd cov = h2 * ensemble_cov(ens);

  // Square root of the PSD kernel covariance via eigendecomposition; tolerates
  // rank-deficient ensembles where a Cholesky factorization would fail.
  Eigen::MatrixXd root = Eigen::MatrixXd::Zero(d, d);
  bool has_noise = false;
  if (h2 > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd evals = eig.eigenvalues();
    const double scale = std::max(evals.cwiseAbs().maxCoeff(), mu.cwiseAbs().maxCoeff());
    const double floor = 1e-300 + scale * 1e-30;
    if (eig.info() == Eigen::Success && evals.maxCoeff() > floor) {
      root = eig.eigenvectors() * evals.cwiseMax(0.0).cwiseSqrt().asDiagonal();
      has_noise = true;
    }
  }

  const CategoricalSampler pick(ens.weights());
  std::vector<double> positions(n_out * dim);
  Eigen::VectorXd centre(d);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n_out; ++i) {
    const auto parent = ens.position(pick(rng));
    for (Eigen::Index k = 0; k < d; ++k) {
      centre[k] = cfg.a * parent[static_cast<std::size_t>(k)] + (1.0 - cfg.a) * mu[k];
    }
    if (cfg.a == 1.0) {
      // Exact copy of the parent; avoids rounding in the shrink step.
      for (Eigen::Index k = 0; k < d; ++k) centre[k] = parent[static_cast<std::size_t>(k)];
    }
    if (has_noise) {
      for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
      centre += root * z;
    }
    for (std::size_t k = 0; k < dim; ++k) positions[i * dim + k] = centre[static_cast<Eigen::Index>(k)];
  }
  return ParticleEnsemble::uniform(dim, std::move(positions));
}

}  // namespace phasegrid
