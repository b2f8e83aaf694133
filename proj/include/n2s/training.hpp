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

#ifndef N2S_TRAINING_HPP_
#define N2S_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "n2s/net.hpp"
#include "n2s/rng.hpp"
#include "n2s/tensor.hpp"
#include "n2s/tweedie.hpp"

namespace n2s {

// Only selects default annealing ranges; training itself is family-agnostic.
enum class NoiseFamily { kGaussian, kPoisson, kGamma };

NoiseFamily parse_family(const std::string& name);
std::string family_name(NoiseFamily family);

struct AnnealingRange {
  double max = 0.1;
  double min = 0.001;
};

// Gaussian and Gamma: [0.1, 0.001]. Poisson: [1, 0.05], for networks that
// see the counts y / zeta.
AnnealingRange default_annealing(NoiseFamily family);

struct TrainConfig {
  int epochs = 30;
  double lr = 2e-4;
  double lr_decayed = 2e-5;
  // Last epoch trained at `lr`; 0 means half of `epochs`.
  int lr_switch_epoch = 0;
  double sigma_a_max = 0.1;
  double sigma_a_min = 0.001;
  std::size_t patch = 64;
  std::size_t batch = 1;
  std::size_t patches_per_image = 1;
  std::uint64_t seed = 0;
  NoiseFamily family = NoiseFamily::kGaussian;

  static TrainConfig defaults_for(NoiseFamily family);
  void validate() const;
};

// Perturbation level of epoch n (1-based): max (1 - q) + min q with q = n / N.
double annealed_sigma(const TrainConfig& cfg, int epoch);
double learning_rate(const TrainConfig& cfg, int epoch);

struct EpochReport {
  int epoch = 0;
  double sigma_a = 0.0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct LossReport {
  std::vector<EpochReport> epochs;
};

struct LossAndGradient {
  double loss = 0.0;
  Tensor grad;
};

// Amortized residual DAE objective, averaged over every element of the batch:
//   mean || u + sigma_a R(y + sigma_a u) ||^2,  u ~ N(0, I),
// one u per batch item drawn from `rng` in index order. y_batch is
// [B, C, H, W]. Returns the value and its exact parameter gradient.
LossAndGradient ardae_loss(const ResidualNet& net, const Tensor& y_batch, double sigma_a,
                           Rng& rng);

// Plain DAE objective mean || y - F(y + sigma_a u) ||^2 with the residual
// parameterization F(v) = sigma_a^2 R(v) + v. Consumes `rng` exactly like
// ardae_loss, so equal generator states give the same u.
double dae_loss(const ResidualNet& net, const Tensor& y_batch, double sigma_a, Rng& rng);

// A map R^n -> R^n on single images. When `divergence` is empty it is
// estimated by central differences, one pixel at a time.
struct VectorField {
  std::function<Tensor(const Tensor&)> apply;
  std::function<double(const Tensor&)> divergence;
};

struct DivergenceOptions {
  double step = 1e-4;
  // Finite differences cost 2n evaluations; larger inputs are rejected.
  std::size_t max_elements = 64 * 64;
};

double divergence(const VectorField& field, const Tensor& y, const DivergenceOptions& opts = {});

// Stein's unbiased risk estimate per image,
//   || y - F(y) ||^2 + 2 sigma^2 div F(y),
// averaged over the leading batch axis of y_batch.
double sure_loss(const VectorField& denoiser, const Tensor& y_batch, double sigma,
                 const DivergenceOptions& opts = {});

// Implicit score matching per image, 1/2 || Psi(y) ||^2 + div Psi(y),
// averaged over the leading batch axis.
double ism_loss(const VectorField& score_model, const Tensor& y_batch,
                const DivergenceOptions& opts = {});

// F(y) = y + sigma^2 R(y) and Psi(y) = R(y) for a network.
VectorField residual_denoiser(const ResidualNet& net, double sigma);
VectorField score_model(const ResidualNet& net);

// Annealed AR-DAE training. Each epoch visits every corpus image
// patches_per_image times in a seeded random order, cropping a random
// patch x patch window with random horizontal/vertical flips, and takes one
// Adam step per batch. Deterministic given cfg.seed. `on_epoch`, if set, is
// called after every epoch.
using EpochCallback = std::function<void(const EpochReport&, const ResidualNet&)>;
LossReport train(ResidualNet& net, const std::vector<Tensor>& corpus, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

// The trained residual network is the score estimate itself.
ScoreField score_of(const ResidualNet& net, const Tensor& y);

}  // namespace n2s

#endif  // N2S_TRAINING_HPP_
