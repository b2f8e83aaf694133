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

#include "n2s/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "n2s/adam.hpp"
#include "n2s/errors.hpp"

namespace n2s {
namespace {

void require_batch(const Tensor& y_batch, const char* op) {
  if (y_batch.empty() || y_batch.ndim() < 2) {
    throw ShapeError(std::string(op) + ": expected a batch with a leading axis");
  }
}

// The perturbation for each item, drawn in index order.
Tensor draw_perturbation(const Tensor& y_batch, Rng& rng) {
  Tensor u(y_batch.shape());
  for (std::size_t b = 0; b < y_batch.extent(0); ++b) {
    for (double& v : u.slice(b)) v = rng.normal();
  }
  return u;
}

Tensor crop_patch(const Tensor& image, std::size_t patch, Rng& rng) {
  const std::size_t channels = image.extent(0);
  const std::size_t h = image.extent(1);
  const std::size_t w = image.extent(2);
  const std::size_t top = rng.below(h - patch + 1);
  const std::size_t left = rng.below(w - patch + 1);
  const bool flip_h = rng.uniform() < 0.5;
  const bool flip_v = rng.uniform() < 0.5;
  Tensor out(Shape{channels, patch, patch});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < patch; ++y) {
      const std::size_t sy = top + (flip_v ? patch - 1 - y : y);
      for (std::size_t x = 0; x < patch; ++x) {
        const std::size_t sx = left + (flip_h ? patch - 1 - x : x);
        out[(c * patch + y) * patch + x] = image[(c * h + sy) * w + sx];
      }
    }
  }
  return out;
}

}  // namespace

NoiseFamily parse_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "poisson") return NoiseFamily::kPoisson;
  if (name == "gamma") return NoiseFamily::kGamma;
  throw InvalidArgument("unknown noise family '" + name + "'");
}

std::string family_name(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return "gaussian";
    case NoiseFamily::kPoisson:
      return "poisson";
    case NoiseFamily::kGamma:
      return "gamma";
  }
  return "?";
}

AnnealingRange default_annealing(NoiseFamily family) {
  if (family == NoiseFamily::kPoisson) return {1.0, 0.05};
  return {0.1, 0.001};
}

TrainConfig TrainConfig::defaults_for(NoiseFamily family) {
  TrainConfig cfg;
  cfg.family = family;
  const AnnealingRange r = default_annealing(family);
  cfg.sigma_a_max = r.max;
  cfg.sigma_a_min = r.min;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (!(sigma_a_min > 0.0) || !(sigma_a_max >= sigma_a_min)) {
    throw InvalidArgument("train: need sigma_a_max >= sigma_a_min > 0");
  }
  if (!(lr >= 0.0) || !(lr_decayed >= 0.0)) throw InvalidArgument("train: negative learning rate");
  if (lr_switch_epoch < 0) throw InvalidArgument("train: negative lr_switch_epoch");
  if (patch < 1) throw InvalidArgument("train: patch must be >= 1");
  if (batch < 1) throw InvalidArgument("train: batch must be >= 1");
  if (patches_per_image < 1) throw InvalidArgument("train: patches_per_image must be >= 1");
}

double annealed_sigma(const TrainConfig& cfg, int epoch) {
  const double q = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return cfg.sigma_a_max * (1.0 - q) + cfg.sigma_a_min * q;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  const int last_high = cfg.lr_switch_epoch > 0 ? cfg.lr_switch_epoch : cfg.epochs / 2;
  return epoch <= last_high ? cfg.lr : cfg.lr_decayed;
}

LossAndGradient ardae_loss(const ResidualNet& net, const Tensor& y_batch, double sigma_a,
                           Rng& rng) {
  require_batch(y_batch, "ardae_loss");
  if (!(sigma_a > 0.0)) throw InvalidArgument("ardae_loss: sigma_a must be > 0");
  const Tensor u = draw_perturbation(y_batch, rng);
  Tensor perturbed(y_batch.shape());
  for (std::size_t i = 0; i < u.size(); ++i) perturbed[i] = y_batch[i] + sigma_a * u[i];
  const double n = static_cast<double>(y_batch.size());
  double loss = 0.0;
  auto upstream_of = [&](const Tensor& r) {
    Tensor residual(y_batch.shape());
    for (std::size_t i = 0; i < u.size(); ++i) {
      residual[i] = u[i] + sigma_a * r[i];
      loss += residual[i] * residual[i];
    }
    // d/dR of mean ||u + s R||^2 is 2 s (u + s R) / n.
    return (2.0 * sigma_a / n) * residual;
  };
  Tensor grad = net.forward_backward(perturbed, upstream_of).grad;
  return {loss / n, std::move(grad)};
}

double dae_loss(const ResidualNet& net, const Tensor& y_batch, double sigma_a, Rng& rng) {
  require_batch(y_batch, "dae_loss");
  if (!(sigma_a > 0.0)) throw InvalidArgument("dae_loss: sigma_a must be > 0");
  const Tensor u = draw_perturbation(y_batch, rng);
  Tensor perturbed(y_batch.shape());
  for (std::size_t i = 0; i < u.size(); ++i) perturbed[i] = y_batch[i] + sigma_a * u[i];
  const Tensor r = net.forward(perturbed);
  const double var = sigma_a * sigma_a;
  double loss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double f = var * r[i] + perturbed[i];
    const double d = y_batch[i] - f;
    loss += d * d;
  }
  return loss / static_cast<double>(y_batch.size());
}

double divergence(const VectorField& field, const Tensor& y, const DivergenceOptions& opts) {
  if (field.divergence) return field.divergence(y);
  if (!field.apply) throw InvalidArgument("divergence: field has no map");
  if (y.size() > opts.max_elements) {
    throw InvalidArgument("divergence: " + std::to_string(y.size()) +
                          " elements exceed the finite-difference cap of " +
                          std::to_string(opts.max_elements));
  }
  const double h = opts.step;
  double total = 0.0;
  Tensor probe = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    probe[i] = y[i] + h;
    const double plus = field.apply(probe)[i];
    probe[i] = y[i] - h;
    const double minus = field.apply(probe)[i];
    probe[i] = y[i];
    total += (plus - minus) / (2.0 * h);
  }
  return total;
}

double sure_loss(const VectorField& denoiser, const Tensor& y_batch, double sigma,
                 const DivergenceOptions& opts) {
  require_batch(y_batch, "sure_loss");
  const double var = sigma * sigma;
  double total = 0.0;
  for (std::size_t b = 0; b < y_batch.extent(0); ++b) {
    const Tensor y = y_batch.slice_copy(b);
    const Tensor f = denoiser.apply(y);
    total += squared_norm(y - f) + 2.0 * var * divergence(denoiser, y, opts);
  }
  return total / static_cast<double>(y_batch.extent(0));
}

double ism_loss(const VectorField& score_model, const Tensor& y_batch,
                const DivergenceOptions& opts) {
  require_batch(y_batch, "ism_loss");
  double total = 0.0;
  for (std::size_t b = 0; b < y_batch.extent(0); ++b) {
    const Tensor y = y_batch.slice_copy(b);
    total += 0.5 * squared_norm(score_model.apply(y)) + divergence(score_model, y, opts);
  }
  return total / static_cast<double>(y_batch.extent(0));
}

VectorField residual_denoiser(const ResidualNet& net, double sigma) {
  const double var = sigma * sigma;
  return {[&net, var](const Tensor& y) {
            Tensor f = net.forward(y);
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = y[i] + var * f[i];
            return f;
          },
          {}};
}

VectorField score_model(const ResidualNet& net) {
  return {[&net](const Tensor& y) { return net.forward(y); }, {}};
}

LossReport train(ResidualNet& net, const std::vector<Tensor>& corpus, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.empty()) throw InvalidArgument("train: empty corpus");
  for (const Tensor& img : corpus) {
    if (img.ndim() != 3) throw ShapeError("train: corpus images must be [C,H,W]");
    if (img.extent(0) != net.spec().in_channels()) {
      throw ShapeError("train: corpus channel count does not match the network");
    }
    if (cfg.patch > img.extent(1) || cfg.patch > img.extent(2)) {
      throw InvalidArgument("train: patch " + std::to_string(cfg.patch) +
                            " larger than image " + shape_string(img.shape()));
    }
  }

  Rng rng(cfg.seed, 1);
  AdamState adam = AdamState::for_parameters(net.parameters(), cfg.lr);
  LossReport report;
  const std::size_t visits = corpus.size() * cfg.patches_per_image;
  std::vector<std::size_t> order(visits);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double sigma_a = annealed_sigma(cfg, epoch);
    adam.lr = learning_rate(cfg, epoch);

    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = visits; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t first = 0; first < visits; first += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, visits - first);
      std::vector<Tensor> patches;
      patches.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        const Tensor& img = corpus[order[first + k] / cfg.patches_per_image];
        patches.push_back(crop_patch(img, cfg.patch, rng));
      }
      auto [loss, grad] = ardae_loss(net, stack(patches), sigma_a, rng);
      adam_step(adam, net.parameters(), grad);
      loss_sum += loss * static_cast<double>(count);
    }
    if (!net.parameters().all_finite()) {
      throw NumericalError("train: parameters diverged in epoch " + std::to_string(epoch));
    }
    EpochReport e;
    e.epoch = epoch;
    e.sigma_a = sigma_a;
    e.lr = adam.lr;
    e.mean_loss = loss_sum / static_cast<double>(visits);
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(e);
    if (on_epoch) on_epoch(e, net);
  }
  return report;
}

ScoreField score_of(const ResidualNet& net, const Tensor& y) {
  return ScoreField(net.forward(y));
}

}  // namespace n2s
