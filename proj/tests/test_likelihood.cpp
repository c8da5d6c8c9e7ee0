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

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phasegrid/likelihood.hpp"
#include "phasegrid/rng.hpp"

namespace {

using phasegrid::ExperimentDesign;
using phasegrid::GroundTruth;
using phasegrid::LikelihoodModel;
using phasegrid::Outcome;
using phasegrid::Rng;

constexpr double kPi = std::numbers::pi;

TEST(Likelihood, IdealAtZeroPhaseIsOne) {
  for (double t : {1e-3, 1.0, 37.5, 1e9}) {
    EXPECT_EQ(phasegrid::likelihood_ideal(Outcome::Zero, 0.0, {t, 0.0}), 1.0);
  }
}

TEST(Likelihood, IdealQuarterTurnIsZero) {
  EXPECT_NEAR(phasegrid::likelihood_ideal(Outcome::Zero, 1.0, {kPi, 0.0}), 0.0, 1e-15);
}

TEST(Likelihood, IdealOneMatchesSineSquared) {
  // Independent scalar oracle: sin^2((0.5 - 0.1) * 2 / 2) = sin^2(0.4).
  const double s = std::sin(0.4);
  const ExperimentDesign d{2.0, 0.1};
  EXPECT_NEAR(phasegrid::likelihood_ideal(Outcome::One, 0.5, d), s * s, 1e-15);
  EXPECT_NEAR(phasegrid::likelihood_ideal(Outcome::One, 0.5, d),
              1.0 - phasegrid::likelihood_ideal(Outcome::Zero, 0.5, d), 1e-15);
}

TEST(Likelihood, DephasedMatchesDirectFormula) {
  const double t2 = 50.0 * kPi;
  const double decay = std::exp(-10.0 / t2);
  const double c = std::cos(1.5);
  const double expected = decay * c * c + (1.0 - decay) / 2.0;
  EXPECT_NEAR(phasegrid::likelihood_dephased(Outcome::Zero, 0.3, t2, {10.0, 0.0}), expected, 1e-15);
}

TEST(Likelihood, DephasedLimits) {
  const ExperimentDesign short_t{1.0, 0.2};
  for (Outcome d : {Outcome::Zero, Outcome::One}) {
    EXPECT_NEAR(phasegrid::likelihood_dephased(d, 0.7, 1e15, short_t),
                phasegrid::likelihood_ideal(d, 0.7, short_t), 1e-12);
    EXPECT_NEAR(phasegrid::likelihood_dephased(d, 0.7, 1.0, {1e3, 0.0}), 0.5, 1e-12);
  }
}

TEST(Likelihood, DephasedRejectsNonPositiveT2) {
  EXPECT_THROW(phasegrid::likelihood_dephased(Outcome::Zero, 0.1, 0.0, {1.0, 0.0}),
               std::domain_error);
  EXPECT_THROW(LikelihoodModel::dephasing_known(-1.0), std::domain_error);
  EXPECT_THROW(phasegrid::likelihood_dephased_rate(Outcome::Zero, 0.1, -0.5, {1.0, 0.0}),
               std::domain_error);
}

TEST(Likelihood, RateFormMatchesT2Form) {
  const ExperimentDesign d{12.0, 0.05};
  EXPECT_NEAR(phasegrid::likelihood_dephased_rate(Outcome::One, 0.4, 1.0 / 30.0, d),
              phasegrid::likelihood_dephased(Outcome::One, 0.4, 30.0, d), 1e-15);
  EXPECT_EQ(phasegrid::likelihood_dephased_rate(Outcome::Zero, 0.4, 0.0, d),
            phasegrid::likelihood_ideal(Outcome::Zero, 0.4, d));
}

TEST(Likelihood, ModelDispatch) {
  const ExperimentDesign d{3.0, 0.0};
  EXPECT_EQ(LikelihoodModel::ideal().probability(Outcome::Zero, 0.2, d),
            phasegrid::likelihood_ideal(Outcome::Zero, 0.2, d));
  EXPECT_EQ(LikelihoodModel::dephasing_known(7.0).probability(Outcome::Zero, 0.2, d),
            phasegrid::likelihood_dephased(Outcome::Zero, 0.2, 7.0, d));
  EXPECT_THROW(LikelihoodModel::dephasing_unknown().probability(Outcome::Zero, 0.2, d),
               std::logic_error);
  EXPECT_EQ(LikelihoodModel::dephasing_unknown().probability(Outcome::Zero, 0.2, 0.1, d),
            phasegrid::likelihood_dephased_rate(Outcome::Zero, 0.2, 0.1, d));
}

TEST(Likelihood, DesignValidation) {
  EXPECT_THROW(ExperimentDesign({0.0, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW(ExperimentDesign({1.0, std::nan("")}).validate(), std::invalid_argument);
  EXPECT_NO_THROW(ExperimentDesign({1.0, -3.0}).validate());
}

// Property: both outcomes sum to one and stay in [0, 1] for every model.
TEST(LikelihoodProperty, ComplementAndRange) {
  Rng rng(20260101);
  for (int i = 0; i < 20000; ++i) {
    const double omega = rng.uniform(-5.0, 5.0);
    const ExperimentDesign d{std::exp(rng.uniform(-7.0, 25.0)), rng.uniform(-2.0, 2.0)};
    const double t2 = std::exp(rng.uniform(-3.0, 10.0));
    const double p[3][2] = {
        {phasegrid::likelihood_ideal(Outcome::Zero, omega, d),
         phasegrid::likelihood_ideal(Outcome::One, omega, d)},
        {phasegrid::likelihood_dephased(Outcome::Zero, omega, t2, d),
         phasegrid::likelihood_dephased(Outcome::One, omega, t2, d)},
        {phasegrid::likelihood_dephased_rate(Outcome::Zero, omega, 1.0 / t2, d),
         phasegrid::likelihood_dephased_rate(Outcome::One, omega, 1.0 / t2, d)}};
    for (const auto& pair : p) {
      EXPECT_NEAR(pair[0] + pair[1], 1.0, 1e-12);
      EXPECT_GE(pair[0], 0.0);
      EXPECT_LE(pair[0], 1.0);
      EXPECT_GE(pair[1], 0.0);
      EXPECT_LE(pair[1], 1.0);
    }
  }
}

// With t / T2 <= 1e-12 the two forms differ by at most (t / T2) / 2.
TEST(LikelihoodProperty, LargeT2AgreesWithIdeal) {
  Rng rng(99);
  for (int i = 0; i < 5000; ++i) {
    const ExperimentDesign d{std::exp(rng.uniform(-5.0, std::log(1e6))), rng.uniform(-1.0, 1.0)};
    const double omega = rng.uniform(-1.0, 1.0);
    EXPECT_NEAR(phasegrid::likelihood_dephased(Outcome::Zero, omega, 1e18, d),
                phasegrid::likelihood_ideal(Outcome::Zero, omega, d), 1e-12);
  }
}

TEST(SimulateOutcome, DeterministicEndpoints) {
  Rng rng(5);
  GroundTruth zero{0.0};
  GroundTruth one{1.0};
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(phasegrid::simulate_outcome(zero, {rng.uniform(0.1, 100.0), 0.0}, rng), Outcome::Zero);
    EXPECT_EQ(phasegrid::simulate_outcome(one, {kPi, 0.0}, rng), Outcome::One);
  }
}

TEST(SimulateOutcome, FrequencyMatchesFormula) {
  const GroundTruth truth{0.5};
  const ExperimentDesign d{1.0, 0.0};
  const double p0 = std::cos(0.25) * std::cos(0.25);
  const int n = 100000;
  Rng rng(123456);
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += phasegrid::simulate_outcome(truth, d, rng) == Outcome::Zero;
  const double sigma = std::sqrt(p0 * (1.0 - p0) / n);
  EXPECT_NEAR(static_cast<double>(zeros) / n, p0, 3.0 * sigma);
}

TEST(SimulateOutcome, DephasedFrequency) {
  GroundTruth truth{0.3};
  truth.t2 = 20.0;
  const ExperimentDesign d{15.0, 0.1};
  const double decay = std::exp(-15.0 / 20.0);
  const double c = std::cos(0.5 * 0.2 * 15.0);
  const double p0 = decay * c * c + 0.5 * (1.0 - decay);
  const int n = 100000;
  Rng rng(77);
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += phasegrid::simulate_outcome(truth, d, rng) == Outcome::Zero;
  EXPECT_NEAR(static_cast<double>(zeros) / n, p0, 3.0 * std::sqrt(p0 * (1.0 - p0) / n));
}

TEST(SimulateOutcome, ReproducibleWithSameSeed) {
  const GroundTruth truth{0.37};
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 500; ++i) {
    const ExperimentDesign d{1.0 + i, 0.0};
    EXPECT_EQ(phasegrid::simulate_outcome(truth, d, a), phasegrid::simulate_outcome(truth, d, b));
  }
}

TEST(Rng, UniformRangeAndStreamsDiffer) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_NE(Rng::stream(1, 0).bits(), Rng::stream(1, 1).bits());
  EXPECT_EQ(Rng::stream(9, 3).bits(), Rng::stream(9, 3).bits());
}

TEST(Rng, NormalMoments) {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sum_sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

}  // namespace
