// Copyright (c) the n2s Project Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef N2S_TWEEDIE_HPP_
#define N2S_TWEEDIE_HPP_

#include <functional>
#include <variant>

#include "n2s/noise_models.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

// Estimate of l'(y) = d/dy log p(y), one value per pixel of the image it was
// computed from. Units are 1/intensity.
class ScoreField {
 public:
  ScoreField() = default;
  explicit ScoreField(Tensor values);

  const Tensor& values() const { return values_; }
  const Shape& shape() const { return values_.shape(); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Tensor values_;
};

// A score evaluated at the photon counts z = y / zeta rather than at y. The
// Poisson estimator only accepts this wrapper.
struct CountScore {
  ScoreField field;
};

// Evaluates a score model at an arbitrary input (the trained network, or an
// analytic marginal in tests).
using ScoreFn = std::function<ScoreField(const Tensor&)>;

// x = y + sigma^2 l'(y).
Tensor denoise_gaussian(const Tensor& y, const ScoreField& score, double sigma);

enum class LatticeCheck { kWarn, kOff };

// x = (y + zeta/2) exp(l'(y / zeta)). Inputs off the lattice zeta * N are
// reported through n2s::warn, not rejected.
Tensor denoise_poisson(const Tensor& y, const CountScore& score, double zeta,
                       LatticeCheck check = LatticeCheck::kWarn);

// Smallest admissible denominator of the Gamma estimator.
inline constexpr double kGammaDenominatorFloor = 1e-9;

// x = beta y / ((alpha - 1) - y l'(y)). A denominator at or below
// kGammaDenominatorFloor raises SingularityError carrying the pixel index.
Tensor denoise_gamma(const Tensor& y, const ScoreField& score, double alpha, double beta);

// x = e^l' / (1 + e^l').
Tensor denoise_bernoulli(const ScoreField& score);
// x = -l'.
Tensor denoise_exponential(const ScoreField& score);

struct CanonicalEstimate {
  Tensor eta;   // eta_hat = -l0'(y) + l'(y)
  Tensor xhat;  // eta_hat pushed through the family's inverse link
};

// Generic route for families with T(y) = y: Gaussian, PoissonGain (score at
// the counts y / zeta), Bernoulli, Exponential. Vector-statistic families
// (GaussianNatural, Gamma) raise UnsupportedModel.
CanonicalEstimate solve_canonical(const NoiseModel& model, const Tensor& y,
                                  const ScoreField& score);

// Mixed Poisson-Gaussian data, two passes with one score model: remove the
// Gaussian part with score_fn(y), then apply the Poisson estimator to the
// intermediate image with score_fn(intermediate / zeta).
Tensor denoise_mixed_pg(const Tensor& y, const ScoreFn& score_fn, double sigma, double zeta);

// Priors with closed-form marginal scores, used as ground truth.
struct GaussPrior {
  double mu0 = 0.0;
  double tau = 1.0;
};
// All mass on one image; x0 has the image's shape or a single element.
struct PointMass {
  Tensor x0;
};
using ConjugateOracle = std::variant<GaussPrior, PointMass>;

// Marginal score of y under the oracle prior and the noise model. For
// PoissonGain, `y` is the count-domain argument z (the network's input
// domain) and the result is l'(z).
ScoreField analytic_score(const ConjugateOracle& oracle, const NoiseModel& model,
                          const Tensor& y);

namespace detail {
// Poisson estimator with the additive constant exposed, so that the oracle
// suite can be checked against a deliberately wrong formula.
Tensor denoise_poisson_with_offset(const Tensor& y, const CountScore& score, double zeta,
                                   double offset, LatticeCheck check);
}  // namespace detail

}  // namespace n2s

#endif  // N2S_TWEEDIE_HPP_
