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

#ifndef PHASEGRID_LIKELIHOOD_HPP
#define PHASEGRID_LIKELIHOOD_HPP

#include <cstdint>
#include <limits>
#include <optional>

#include "phasegrid/rng.hpp"

namespace phasegrid {

/// Single-qubit measurement result.
enum class Outcome : std::uint8_t { Zero = 0, One = 1 };

/// Settings of one phase-estimation experiment.
struct ExperimentDesign {
  double evolution_time = 1.0;   // t > 0
  double inversion_phase = 0.0;  // x, radians per unit time

  /// Throws std::invalid_argument unless t > 0 and both fields are finite.
  void validate() const;
};

/// Tagged measurement model family.
///
/// Ideal is kept separate from DephasingKnown instead of encoding it as an
/// infinite T2, which would evaluate exp(-t/inf) for every call.
class LikelihoodModel {
 public:
  enum class Kind { Ideal, DephasingKnown, DephasingUnknown };

  static LikelihoodModel ideal() { return LikelihoodModel(Kind::Ideal, 0.0); }
  static LikelihoodModel dephasing_known(double t2);
  static LikelihoodModel dephasing_unknown() { return LikelihoodModel(Kind::DephasingUnknown, 0.0); }

  Kind kind() const noexcept { return kind_; }
  /// Only meaningful for DephasingKnown.
  double t2() const noexcept { return t2_; }

  /// P(d | omega; t, x) for Ideal and DephasingKnown. DephasingUnknown needs
  /// a hypothesised rate, so it throws std::logic_error here.
  double probability(Outcome d, double omega, const ExperimentDesign& design) const;

  /// P(d | omega, theta; t, x) with dephasing rate theta = 1/T2. Ideal and
  /// DephasingKnown ignore theta.
  double probability(Outcome d, double omega, double theta, const ExperimentDesign& design) const;

 private:
  LikelihoodModel(Kind kind, double t2) : kind_(kind), t2_(t2) {}

  Kind kind_;
  double t2_;
};

/// cos^2((omega - x) t / 2) for d = 0, sin^2 for d = 1.
double likelihood_ideal(Outcome d, double omega, const ExperimentDesign& design);

/// exp(-t/T2) P_ideal + (1 - exp(-t/T2)) / 2. Throws std::domain_error if t2 <= 0.
double likelihood_dephased(Outcome d, double omega, double t2, const ExperimentDesign& design);

/// Same as likelihood_dephased but parameterised by the rate theta = 1/T2 >= 0;
/// theta = 0 is the ideal limit. Throws std::domain_error if theta < 0.
double likelihood_dephased_rate(Outcome d, double omega, double theta,
                                const ExperimentDesign& design);

/// Reference parameters used to simulate measurements.
struct GroundTruth {
  double omega = 0.0;
  double t2 = std::numeric_limits<double>::infinity();  // infinity means no dephasing
  std::uint64_t seed = 0;
};

/// Draws one measurement outcome: a single uniform variate compared with P(0).
Outcome simulate_outcome(const GroundTruth& truth, const ExperimentDesign& design, Rng& rng);

}  // namespace phasegrid

#endif  // PHASEGRID_LIKELIHOOD_HPP
