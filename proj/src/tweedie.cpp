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

#include "n2s/tweedie.hpp"

#include <cmath>
#include <sstream>

#include "n2s/diagnostics.hpp"
#include "n2s/errors.hpp"

namespace n2s {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_score_shape(const Tensor& y, const ScoreField& score, const char* op) {
  require_same_shape(y, score.values(), op);
}

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void check_lattice(const Tensor& y, double zeta) {
  std::size_t off = 0;
  std::size_t negative = 0;
  for (double v : y.values()) {
    const double z = v / zeta;
    if (z < 0.0) ++negative;
    if (std::fabs(z - std::nearbyint(z)) > 1e-6 * std::max(1.0, std::fabs(z))) ++off;
  }
  if (off || negative) {
    std::ostringstream os;
    os << "denoise_poisson: " << off << " of " << y.size()
       << " pixels off the gain lattice (zeta=" << zeta << ")";
    if (negative) os << ", " << negative << " negative";
    warn(os.str());
  }
}

double point_value(const Tensor& x0, std::size_t i) {
  return x0.size() == 1 ? x0[0] : x0[i];
}

// log p(z) - log p0(z) for a point mass at rate theta under Poisson counts:
// the 1/z! factors cancel, leaving z log(theta) - theta for every real z.
double poisson_point_lambda(double z, double theta) {
  return z * std::log(theta) - theta;
}

}  // namespace

ScoreField::ScoreField(Tensor values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("ScoreField: empty tensor");
  if (!values_.all_finite()) throw NumericalError("ScoreField: non-finite score value");
}

Tensor denoise_gaussian(const Tensor& y, const ScoreField& score, double sigma) {
  require_score_shape(y, score, "denoise_gaussian");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("denoise_gaussian: sigma must be finite and >= 0");
  }
  const double var = sigma * sigma;
  Tensor x(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] + var * score[i];
  return x;
}

namespace detail {

Tensor denoise_poisson_with_offset(const Tensor& y, const CountScore& score, double zeta,
                                   double offset, LatticeCheck check) {
  require_score_shape(y, score.field, "denoise_poisson");
  if (!(zeta > 0.0) || !std::isfinite(zeta)) {
    throw InvalidArgument("denoise_poisson: zeta must be > 0");
  }
  if (check == LatticeCheck::kWarn) check_lattice(y, zeta);
  Tensor x(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = (y[i] + offset * zeta) * std::exp(score.field[i]);
  }
  if (!x.all_finite()) throw NumericalError("denoise_poisson: non-finite estimate");
  return x;
}

}  // namespace detail

Tensor denoise_poisson(const Tensor& y, const CountScore& score, double zeta,
                       LatticeCheck check) {
  return detail::denoise_poisson_with_offset(y, score, zeta, 0.5, check);
}

Tensor denoise_gamma(const Tensor& y, const ScoreField& score, double alpha, double beta) {
  require_score_shape(y, score, "denoise_gamma");
  if (!(alpha > 1.0) || !(beta > 0.0)) {
    throw InvalidArgument("denoise_gamma: requires alpha > 1 and beta > 0");
  }
  Tensor x(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0)) {
      throw DataError("denoise_gamma: negative observation at index " + std::to_string(i));
    }
    const double denom = (alpha - 1.0) - y[i] * score[i];
    if (!(denom > kGammaDenominatorFloor)) {
      std::ostringstream os;
      os << "denoise_gamma: singular denominator " << denom << " at pixel " << i;
      throw SingularityError(os.str(), i);
    }
    x[i] = beta * y[i] / denom;
  }
  return x;
}

Tensor denoise_bernoulli(const ScoreField& score) {
  Tensor x(score.shape());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = logistic(score[i]);
  return x;
}

Tensor denoise_exponential(const ScoreField& score) {
  Tensor x(score.shape());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -score[i];
  return x;
}

CanonicalEstimate solve_canonical(const NoiseModel& model, const Tensor& y,
                                  const ScoreField& score) {
  validate(model);
  require_score_shape(y, score, "solve_canonical");
  // eta_hat = -l0'(y) + l'(y)
  Tensor eta(y.shape());
  const Tensor l0 = std::visit(
      Overloaded{
          [&](const Gaussian& m) -> Tensor {
            if (m.sigma == 0.0) throw InvalidArgument("solve_canonical: gaussian sigma is 0");
            return base_score(model, y);
          },
          [&](const PoissonGain&) -> Tensor { return base_score(model, y); },
          [&](const Bernoulli&) -> Tensor { return Tensor(y.shape(), 0.0); },
          [&](const Exponential&) -> Tensor { return Tensor(y.shape(), 0.0); },
          [&](const auto&) -> Tensor {
            throw UnsupportedModel("solve_canonical: " + describe(model) +
                                   " has a vector sufficient statistic");
          },
      },
      model);
  for (std::size_t i = 0; i < y.size(); ++i) eta[i] = -l0[i] + score[i];

  Tensor xhat(y.shape());
  std::visit(Overloaded{
                 [&](const Gaussian& m) {
                   const double var = m.sigma * m.sigma;
                   for (std::size_t i = 0; i < y.size(); ++i) xhat[i] = var * eta[i];
                 },
                 [&](const PoissonGain& m) {
                   for (std::size_t i = 0; i < y.size(); ++i) xhat[i] = m.zeta * std::exp(eta[i]);
                 },
                 [&](const Bernoulli&) {
                   for (std::size_t i = 0; i < y.size(); ++i) xhat[i] = logistic(eta[i]);
                 },
                 [&](const Exponential&) {
                   for (std::size_t i = 0; i < y.size(); ++i) xhat[i] = -eta[i];
                 },
                 [](const auto&) {},
             },
             model);
  return {std::move(eta), std::move(xhat)};
}

Tensor denoise_mixed_pg(const Tensor& y, const ScoreFn& score_fn, double sigma, double zeta) {
  if (!score_fn) throw InvalidArgument("denoise_mixed_pg: no score function");
  if (!(zeta > 0.0)) throw InvalidArgument("denoise_mixed_pg: zeta must be > 0");
  const Tensor intermediate = sigma == 0.0 ? y : denoise_gaussian(y, score_fn(y), sigma);
  const Tensor counts = (1.0 / zeta) * intermediate;
  // The intermediate is a real-valued estimate, not a lattice observation.
  return denoise_poisson(intermediate, CountScore{score_fn(counts)}, zeta,
                         sigma == 0.0 ? LatticeCheck::kWarn : LatticeCheck::kOff);
}

ScoreField analytic_score(const ConjugateOracle& oracle, const NoiseModel& model,
                          const Tensor& y) {
  validate(model);
  if (y.empty()) throw InvalidArgument("analytic_score: empty tensor");
  Tensor s(y.shape());

  if (const auto* prior = std::get_if<GaussPrior>(&oracle)) {
    if (!(prior->tau > 0.0)) throw InvalidArgument("GaussPrior: tau must be > 0");
    double sigma = 0.0;
    if (const auto* g = std::get_if<Gaussian>(&model)) {
      sigma = g->sigma;
    } else if (const auto* gn = std::get_if<GaussianNatural>(&model)) {
      sigma = gn->sigma;
    } else {
      throw InvalidArgument("analytic_score: GaussPrior requires a Gaussian noise model");
    }
    // Marginal N(mu0, tau^2 + sigma^2).
    const double var = prior->tau * prior->tau + sigma * sigma;
    for (std::size_t i = 0; i < y.size(); ++i) s[i] = -(y[i] - prior->mu0) / var;
    return ScoreField(std::move(s));
  }

  const Tensor& x0 = std::get<PointMass>(oracle).x0;
  if (x0.empty() || (x0.size() != 1 && !x0.same_shape(y))) {
    throw ShapeError("analytic_score: point mass must be scalar or match the image shape");
  }
  std::visit(
      Overloaded{
          [&](const Gaussian& m) {
            if (m.sigma == 0.0) throw InvalidArgument("analytic_score: gaussian sigma is 0");
            const double var = m.sigma * m.sigma;
            for (std::size_t i = 0; i < y.size(); ++i) s[i] = -(y[i] - point_value(x0, i)) / var;
          },
          [&](const GaussianNatural& m) {
            const double var = m.sigma * m.sigma;
            for (std::size_t i = 0; i < y.size(); ++i) s[i] = -(y[i] - point_value(x0, i)) / var;
          },
          [&](const PoissonGain& m) {
            // The count marginal is discrete. Its log-ratio to the base measure,
            // lambda(z) = log p(z) - log p0(z), is differenced centrally with
            // unit step, and the base-measure score is restored with the
            // continuous approximation -log(z + 1/2) used by the estimator.
            for (std::size_t i = 0; i < y.size(); ++i) {
              const double theta = point_value(x0, i) / m.zeta;
              if (!(theta > 0.0)) {
                throw DataError("analytic_score: poisson point mass must be positive");
              }
              const double z = y[i];
              if (!(z >= 0.0)) throw DataError("analytic_score: negative count");
              const double dlambda =
                  0.5 * (poisson_point_lambda(z + 1.0, theta) - poisson_point_lambda(z - 1.0, theta));
              s[i] = dlambda - std::log(z + 0.5);
            }
          },
          [&](const Gamma& m) {
            // p(y) = beta^a / Gamma(a) (y/x0)^(a-1) exp(-beta y / x0) / x0
            for (std::size_t i = 0; i < y.size(); ++i) {
              if (!(y[i] > 0.0)) throw DataError("analytic_score: gamma needs y > 0");
              s[i] = (m.alpha - 1.0) / y[i] - m.beta / point_value(x0, i);
            }
          },
          [&](const Bernoulli&) {
            for (std::size_t i = 0; i < y.size(); ++i) {
              const double p = point_value(x0, i);
              if (!(p > 0.0 && p < 1.0)) {
                throw DataError("analytic_score: bernoulli point mass must lie in (0,1)");
              }
              s[i] = std::log(p) - std::log1p(-p);
            }
          },
          [&](const Exponential&) {
            for (std::size_t i = 0; i < y.size(); ++i) s[i] = -point_value(x0, i);
          },
      },
      model);
  return ScoreField(std::move(s));
}

}  // namespace n2s
