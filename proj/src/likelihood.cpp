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

#include "phasegrid/likelihood.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phasegrid {

void ExperimentDesign::validate() const {
  if (!std::isfinite(evolution_time) || !(evolution_time > 0.0)) {
    throw std::invalid_argument("evolution time must be finite and positive, got " +
                                std::to_string(evolution_time));
  }
  if (!std::isfinite(inversion_phase)) {
    throw std::invalid_argument("inversion phase must be finite");
  }
}

LikelihoodModel LikelihoodModel::dephasing_known(double t2) {
  if (!(t2 > 0.0)) {
    throw std::domain_error("dephasing model requires T2 > 0");
  }
  return LikelihoodModel(Kind::DephasingKnown, t2);
}

double LikelihoodModel::probability(Outcome d, double omega, const ExperimentDesign& design) const {
  switch (kind_) {
    case Kind::Ideal:
      return likelihood_ideal(d, omega, design);
    case Kind::DephasingKnown:
      return likelihood_dephased(d, omega, t2_, design);
    case Kind::DephasingUnknown:
      break;
  }
  throw std::logic_error("DephasingUnknown model needs a dephasing rate");
}

double LikelihoodModel::probability(Outcome d, double omega, double theta,
                                    const ExperimentDesign& design) const {
  if (kind_ == Kind::DephasingUnknown) {
    return likelihood_dephased_rate(d, omega, theta, design);
  }
  return probability(d, omega, design);
}

double likelihood_ideal(Outcome d, double omega, const ExperimentDesign& design) {
  const double c = std::cos(0.5 * (omega - design.inversion_phase) * design.evolution_time);
  const double p0 = c * c;
  return d == Outcome::Zero ? p0 : 1.0 - p0;
}

namespace {

double mix_with_half(Outcome d, double omega, double decay_exponent,
                     const ExperimentDesign& design) {
  const double visibility = std::exp(-decay_exponent);
  const double mixed = -std::expm1(-decay_exponent);  // 1 - visibility
  return visibility * likelihood_ideal(d, omega, design) + 0.5 * mixed;
}

}  // namespace

double likelihood_dephased(Outcome d, double omega, double t2, const ExperimentDesign& design) {
  if (!(t2 > 0.0)) {
    throw std::domain_error("T2 must be positive");
  }
  return mix_with_half(d, omega, design.evolution_time / t2, design);
}

double likelihood_dephased_rate(Outcome d, double omega, double theta,
                                const ExperimentDesign& design) {
  if (!(theta >= 0.0)) {
    throw std::domain_error("dephasing rate must be non-negative");
  }
  return mix_with_half(d, omega, design.evolution_time * theta, design);
}

Outcome simulate_outcome(const GroundTruth& truth, const ExperimentDesign& design, Rng& rng) {
  const double p0 = std::isinf(truth.t2)
                        ? likelihood_ideal(Outcome::Zero, truth.omega, design)
                        : likelihood_dephased(Outcome::Zero, truth.omega, truth.t2, design);
  return rng.uniform() < p0 ? Outcome::Zero : Outcome::One;
}

}  // namespace phasegrid
