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

#include "n2s/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "n2s/errors.hpp"

namespace n2s {
namespace {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// SplitMix64 finalizer, used to derive child keys.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t poisson_inversion(Rng& rng, double rate) {
  // Sequential search; rate < 30 keeps exp(-rate) well above underflow.
  const double u = rng.uniform();
  double p = std::exp(-rate);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= rate / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf <= u) break;  // tail exhausted by rounding
  }
  return k;
}

std::uint64_t poisson_ptrs(Rng& rng, double rate) {
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform_open();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -rate + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(keyed_engine(seed, stream)) {}

Rng Rng::child(std::uint64_t index) const {
  return Rng(mix64(seed_ ^ mix64(stream_)), index);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw InvalidArgument("gamma parameters must be positive and finite");
  }
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    // Squeeze first; the log test only runs for the few rejected candidates.
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

std::uint64_t Rng::poisson(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw InvalidArgument("poisson rate must be finite and non-negative");
  }
  if (rate == 0.0) return 0;
  if (rate < kPoissonRejectionThreshold) return poisson_inversion(*this, rate);
  return poisson_ptrs(*this, rate);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("below(0)");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Tensor sample_normal(Rng& rng, const Shape& shape) {
  Tensor out(shape);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

Tensor sample_poisson(Rng& rng, const Tensor& rate) {
  if (rate.empty()) throw InvalidArgument("sample_poisson: empty rate tensor");
  Tensor out(rate.shape());
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (!(rate[i] >= 0.0)) {
      throw InvalidArgument("sample_poisson: negative rate at index " + std::to_string(i));
    }
    out[i] = static_cast<double>(rng.poisson(rate[i]));
  }
  return out;
}

Tensor sample_gamma(Rng& rng, double alpha, double beta, const Shape& shape) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw InvalidArgument("sample_gamma: alpha and beta must be positive");
  }
  Tensor out(shape);
  for (double& v : out.values()) v = rng.gamma(alpha, beta);
  return out;
}

}  // namespace n2s
