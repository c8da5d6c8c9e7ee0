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

#ifndef PHASEGRID_SMC_HPP
#define PHASEGRID_SMC_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "phasegrid/rng.hpp"

namespace phasegrid {

/// Weighted point masses in D dimensions. Positions are stored row-major,
/// one particle per row.
class ParticleEnsemble {
 public:
  ParticleEnsemble(std::size_t dim, std::vector<double> positions, std::vector<double> weights);

  /// Equal weights 1/N.
  static ParticleEnsemble uniform(std::size_t dim, std::vector<double> positions);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> position(std::size_t j) const {
    return {positions_.data() + j * dim_, dim_};
  }
  /// First coordinate of particle j; the common case for 1-D ensembles.
  double scalar(std::size_t j) const { return positions_[j * dim_]; }

  std::span<const double> positions() const noexcept { return positions_; }
  std::span<const double> weights() const noexcept { return weights_; }

  ParticleEnsemble with_weights(std::vector<double> weights) const;

 private:
  std::size_t dim_;
  std::vector<double> positions_;
  std::vector<double> weights_;
};

struct ResampleConfig {
  double a = 0.98;              // Liu-West shrinkage; h = sqrt(1 - a^2)
  double ess_threshold = 0.5;   // resample when ESS / N falls below this

  void validate() const;
};

/// Inverse-CDF sampler over non-negative weights; one uniform per draw.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights);

  std::size_t operator()(Rng& rng) const;
  double total() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

 private:
  std::vector<double> cumulative_;
};

/// Bayes update w_j <- w_j L_j / sum_k w_k L_k. Positions are not moved.
/// Throws DegeneratePosterior when every product is zero.
ParticleEnsemble update_weights(const ParticleEnsemble& ens, std::span<const double> likelihoods);

/// 1 / sum w_j^2.
double effective_sample_size(const ParticleEnsemble& ens);

/// True when ESS / N is below cfg.ess_threshold.
bool needs_resample(const ParticleEnsemble& ens, const ResampleConfig& cfg);

Eigen::VectorXd ensemble_mean(const ParticleEnsemble& ens);
Eigen::MatrixXd ensemble_cov(const ParticleEnsemble& ens);

/// Liu-West resampler: each new particle picks a parent j with probability
/// w_j, shrinks it towards the mean (a x_j + (1 - a) mu) and adds Gaussian
/// noise with covariance (1 - a^2) Cov. When that covariance is numerically
/// zero the new particle sits exactly at the shrunk position. Output weights
/// are 1/n_out; n_out = 0 keeps the input size.
ParticleEnsemble liu_west_resample(const ParticleEnsemble& ens, const ResampleConfig& cfg, Rng& rng,
                                   std::size_t n_out = 0);

}  // namespace phasegrid

#endif  // PHASEGRID_SMC_HPP
