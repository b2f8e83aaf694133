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

#ifndef N2S_NOISE_MODELS_HPP_
#define N2S_NOISE_MODELS_HPP_

#include <string>
#include <string_view>
#include <variant>

#include "n2s/rng.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

// Additive Gaussian, one-parameter exponential-family form: eta = x / sigma^2,
// T(y) = y, base measure N(0, sigma^2). Intensities are on the [0, 1] scale.
struct Gaussian {
  double sigma = 0.0;
};

// The same Gaussian written with eta = [x / sigma^2, -1 / (2 sigma^2)] and
// T(y) = [y, y^2]. Base measure is constant, so l0' = 0. Samples and
// likelihoods coincide with Gaussian; only the canonical view differs.
struct GaussianNatural {
  double sigma = 0.0;
};

// Low-photon Poisson: y = zeta * z, z ~ Poisson(x / zeta).
struct PoissonGain {
  double zeta = 1.0;
};

// Multiplicative speckle: y = x * n, n ~ Gamma(alpha, rate beta).
struct Gamma {
  double alpha = 2.0;
  double beta = 1.0;
};

// y ~ Bernoulli(x), x in (0, 1).
struct Bernoulli {};

// p(y | x) = x exp(-x y), y >= 0.
struct Exponential {};

using NoiseModel =
    std::variant<Gaussian, GaussianNatural, PoissonGain, Gamma, Bernoulli, Exponential>;

// Throws InvalidArgument if the model's level parameters are out of range.
void validate(const NoiseModel& model);

std::string describe(const NoiseModel& model);

// Parses "gaussian:sigma=25" (sigma on the 8-bit scale, divided by 255),
// "poisson:zeta=0.01", "gamma:k=100" (alpha = beta = k),
// "gamma:alpha=..,beta=..", "bernoulli", "exponential".
NoiseModel parse_noise_model(std::string_view spec);

// Draws y ~ p(y | x) elementwise.
Tensor corrupt(const NoiseModel& model, const Tensor& x, Rng& rng);

// Elementwise l0'(y), the derivative of the log base measure. For PoissonGain
// the argument is the observation y and the count z = y / zeta is used, with
// the approximation -psi(z + 1) ~ -log(z + 1/2).
Tensor base_score(const NoiseModel& model, const Tensor& y);

// Sum of elementwise log p(y | x).
double log_likelihood(const NoiseModel& model, const Tensor& y, const Tensor& x);

}  // namespace n2s

#endif  // N2S_NOISE_MODELS_HPP_
