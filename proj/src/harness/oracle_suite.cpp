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


#include "n2s/harness/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "n2s/errors.hpp"
#include "n2s/net.hpp"
#include "n2s/noise_models.hpp"
#include "n2s/rng.hpp"
#include "n2s/training.hpp"
#include "n2s/tweedie.hpp"

namespace n2s {
namespace {

constexpr double kPointMassTol = 1e-10;
constexpr double kConjugateTol = 1e-12;
constexpr double kLinearSureTol = 1e-8;
constexpr double kNetSureTol = 1e-4;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientStep = 1e-5;
constexpr std::size_t kGradientCoordinates = 200;

// max_i |a_i - b_i| / max(|b_i|, floor)
double max_rel_error(const Tensor& a, const Tensor& b, double floor = 1e-300) {
  require_same_shape(a, b, "max_rel_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

Tensor uniform_tensor(Rng& rng, const Shape& shape, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.values()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

OracleCheck check(std::string suite, std::string name, double error, double tolerance) {
  return {std::move(suite), std::move(name), error, tolerance, error <= tolerance};
}

std::vector<OracleCheck> pointmass_suite(const OracleOptions& opts) {
  const std::string suite = "pointmass";
  std::vector<OracleCheck> out;
  Rng rng(101);
  const Shape shape{1, 8, 8};
  const Tensor x0 = uniform_tensor(rng, shape, 0.05, 0.95);
  const PointMass pm{x0};

  {
    const Gaussian m{25.0 / 255.0};
    const Tensor y = corrupt(m, x0, rng);
    const Tensor xhat = denoise_gaussian(y, analytic_score(pm, m, y), m.sigma);
    out.push_back(check(suite, "gaussian", max_rel_error(xhat, x0), kPointMassTol));
  }
  {
    const PoissonGain m{0.01};
    const Tensor y = corrupt(m, x0, rng);
    const Tensor z = (1.0 / m.zeta) * y;
    const CountScore score{analytic_score(pm, m, z)};
    const Tensor xhat = detail::denoise_poisson_with_offset(y, score, m.zeta, opts.poisson_offset,
                                                            LatticeCheck::kOff);
    out.push_back(check(suite, "poisson", max_rel_error(xhat, x0), kPointMassTol));
  }
  {
    const Gamma m{100.0, 100.0};
    const Tensor y = corrupt(m, x0, rng);
    const Tensor xhat = denoise_gamma(y, analytic_score(pm, m, y), m.alpha, m.beta);
    out.push_back(check(suite, "gamma", max_rel_error(xhat, x0), kPointMassTol));
  }
  {
    const Tensor rate = uniform_tensor(rng, shape, 0.5, 5.0);
    const Tensor y = corrupt(Exponential{}, rate, rng);
    const Tensor xhat = denoise_exponential(analytic_score(PointMass{rate}, Exponential{}, y));
    out.push_back(check(suite, "exponential", max_rel_error(xhat, rate), kPointMassTol));
  }
  {
    const Tensor y = corrupt(Bernoulli{}, x0, rng);
    const Tensor xhat = denoise_bernoulli(analytic_score(pm, Bernoulli{}, y));
    out.push_back(check(suite, "bernoulli", max_rel_error(xhat, x0), kPointMassTol));
  }
  return out;
}

std::vector<OracleCheck> conjugate_suite() {
  const std::string suite = "conjugate";
  std::vector<OracleCheck> out;
  Rng rng(202);
  const Shape shape{1, 8, 8};
  const GaussPrior prior{0.4, 0.2};
  const Gaussian m{25.0 / 255.0};

  Tensor x = sample_normal(rng, shape);
  for (double& v : x.values()) v = prior.mu0 + prior.tau * v;
  const Tensor y = corrupt(m, x, rng);
  const ScoreField score = analytic_score(prior, m, y);

  const double t2 = prior.tau * prior.tau;
  const double s2 = m.sigma * m.sigma;
  Tensor posterior_mean(shape);
  for (std::size_t i = 0; i < y.size(); ++i) {
    posterior_mean[i] = (t2 * y[i] + s2 * prior.mu0) / (t2 + s2);
  }
  const Tensor xhat = denoise_gaussian(y, score, m.sigma);
  out.push_back(check(suite, "gaussian-posterior-mean", max_rel_error(xhat, posterior_mean),
                      kConjugateTol));

  const CanonicalEstimate canon = solve_canonical(m, y, score);
  out.push_back(check(suite, "canonical-gaussian", max_rel_error(canon.xhat, xhat), kConjugateTol));

  const PoissonGain pg{0.02};
  const Tensor x0 = uniform_tensor(rng, shape, 0.05, 0.95);
  const Tensor yp = corrupt(pg, x0, rng);
  const CountScore count_score{analytic_score(PointMass{x0}, pg, (1.0 / pg.zeta) * yp)};
  const Tensor direct = denoise_poisson(yp, count_score, pg.zeta, LatticeCheck::kOff);
  const CanonicalEstimate canon_p = solve_canonical(pg, yp, count_score.field);
  out.push_back(check(suite, "canonical-poisson", max_rel_error(canon_p.xhat, direct),
                      kConjugateTol));
  return out;
}

std::vector<OracleCheck> sure_ism_suite() {
  const std::string suite = "sure-ism";
  std::vector<OracleCheck> out;
  Rng rng(303);
  const Shape batch_shape{2, 1, 4, 4};
  const std::size_t n = 16;

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // R(y) = A vec(y) + b, whose divergence is trace(A).
    const Tensor a = 0.25 * sample_normal(rng, {n, n});
    const Tensor b = sample_normal(rng, {n});
    const double sigma = 0.05 + 0.45 * rng.uniform();
    auto apply_r = [&](const Tensor& y) {
      Tensor r(y.shape());
      for (std::size_t i = 0; i < n; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < n; ++j) acc += a[i * n + j] * y[j];
        r[i] = acc;
      }
      return r;
    };
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
    const VectorField psi{apply_r, [trace](const Tensor&) { return trace; }};
    const VectorField f{[&](const Tensor& y) { return y + (sigma * sigma) * apply_r(y); },
                        [&](const Tensor&) { return static_cast<double>(n) + sigma * sigma * trace; }};
    const Tensor y = sample_normal(rng, batch_shape);
    const double s4 = std::pow(sigma, 4);
    const double lhs = sure_loss(f, y, sigma);
    const double rhs = 2.0 * s4 * ism_loss(psi, y) + 2.0 * sigma * sigma * static_cast<double>(n);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  out.push_back(check(suite, "linear-exact-divergence", worst, kLinearSureTol));

  ResidualNet net(reference_architecture(1));
  Rng init(304);
  net.initialize(init);
  const double sigma = 25.0 / 255.0;
  const Tensor y = uniform_tensor(rng, {1, 1, 16, 16}, 0.0, 1.0);
  const double lhs = sure_loss(residual_denoiser(net, sigma), y, sigma);
  const double rhs = 2.0 * std::pow(sigma, 4) * ism_loss(score_model(net), y) +
                     2.0 * sigma * sigma * static_cast<double>(y.size());
  out.push_back(check(suite, "net-finite-difference", std::abs(lhs - rhs), kNetSureTol));
  return out;
}

// Largest relative error between `grad` and central differences of `loss`
// over random parameter coordinates, cycling through the layers so that
// every layer is sampled.
double gradient_error(ResidualNet& net, const Tensor& grad, const std::function<double()>& loss,
                      Rng& rng) {
  const LayerSpec& spec = net.spec();
  std::vector<std::size_t> offsets{0};
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t taps = std::size_t{spec.kernel} * spec.kernel;
    offsets.push_back(offsets.back() + spec.channels[l + 1] * (spec.channels[l] * taps + 1));
  }
  Tensor& params = net.parameters();
  double worst = 0.0;
  for (std::size_t k = 0; k < kGradientCoordinates; ++k) {
    const std::size_t l = k % spec.layer_count();
    const std::size_t i = offsets[l] + rng.below(offsets[l + 1] - offsets[l]);
    const double saved = params[i];
    params[i] = saved + kGradientStep;
    const double up = loss();
    params[i] = saved - kGradientStep;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * kGradientStep);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

std::vector<OracleCheck> gradient_suite() {
  const std::string suite = "gradient";
  std::vector<OracleCheck> out;
  Rng rng(404);
  ResidualNet net(reference_architecture(2));
  net.initialize(rng);
  // Nonzero biases so every bias coordinate carries signal.
  for (double& v : net.parameters().values()) {
    if (v == 0.0) v = 0.05 * rng.normal();
  }
  const Tensor y = uniform_tensor(rng, {2, 2, 7, 6}, 0.0, 1.0);
  const Tensor upstream = sample_normal(rng, y.shape());

  const Tensor grad = net.backward(y, upstream);
  const double err = gradient_error(
      net, grad, [&] { return dot(upstream, net.forward(y)); }, rng);
  out.push_back(check(suite, "backward", err, kGradientTol));

  const double sigma_a = 0.1;
  Rng draw(405);
  const Tensor loss_grad = ardae_loss(net, y, sigma_a, draw).grad;
  const double err_loss = gradient_error(
      net, loss_grad,
      [&] {
        Rng same(405);
        return ardae_loss(net, y, sigma_a, same).loss;
      },
      rng);
  out.push_back(check(suite, "ardae-loss", err_loss, kGradientTol));
  return out;
}

}  // namespace

const std::vector<std::string>& oracle_suite_names() {
  static const std::vector<std::string> names = {"pointmass", "conjugate", "sure-ism",
                                                 "gradient"};
  return names;
}

std::vector<OracleCheck> run_oracle_suite(std::string_view suite, const OracleOptions& opts) {
  if (suite == "all") {
    std::vector<OracleCheck> all;
    for (const auto& name : oracle_suite_names()) {
      auto part = run_oracle_suite(name, opts);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  if (suite == "pointmass") return pointmass_suite(opts);
  if (suite == "conjugate") return conjugate_suite();
  if (suite == "sure-ism") return sure_ism_suite();
  if (suite == "gradient") return gradient_suite();
  throw InvalidArgument("unknown oracle suite '" + std::string(suite) + "'");
}

void write_oracle_csv(std::ostream& os, const std::vector<OracleCheck>& checks) {
  os << "suite,check,error,tolerance,result\n";
  char buf[64];
  for (const auto& c : checks) {
    os << c.suite << ',' << c.name << ',';
    std::snprintf(buf, sizeof buf, "%.6e,%.1e", c.error, c.tolerance);
    os << buf << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
  }
}

}  // namespace n2s
