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

#include "n2s/blind.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "n2s/errors.hpp"

namespace n2s {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double parse_number(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("grid: bad number '" + std::string(text) + "'");
  }
  return v;
}

double floored(double v) { return v < kQualityFloor ? kQualityFloor : v; }

void require_positive(const Tensor& xhat, const char* metric) {
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    if (xhat[i] < 0.0) {
      throw DataError(std::string(metric) + ": negative restored pixel at index " +
                      std::to_string(i));
    }
  }
}

}  // namespace

void validate(const QualityMetric& metric) {
  std::visit(Overloaded{
                 [](const GaussianTV&) {},
                 [](const PoissonTV& m) {
                   if (!(m.alpha > 0.0)) throw InvalidArgument("PoissonTV: alpha must be > 0");
                 },
                 [](const GammaMAP& m) {
                   if (!(m.alpha > 0.0) || !(m.beta > 0.0) || !(m.gamma > 0.0)) {
                     throw InvalidArgument("GammaMAP: weights must be > 0");
                   }
                   if (std::fabs(m.alpha + m.beta - m.gamma) > 1e-12 * m.gamma) {
                     throw InvalidArgument("GammaMAP: weights must satisfy alpha + beta = gamma");
                   }
                 },
             },
             metric);
}

double tv_norm(const Tensor& x) {
  std::size_t channels = 1, h = 0, w = 0;
  if (x.ndim() == 2) {
    h = x.extent(0);
    w = x.extent(1);
  } else if (x.ndim() == 3) {
    channels = x.extent(0);
    h = x.extent(1);
    w = x.extent(2);
  } else {
    throw ShapeError("tv_norm: expected [H,W] or [C,H,W], got " + shape_string(x.shape()));
  }
  if (h * w < 2) throw ShapeError("tv_norm: image has a single pixel");
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* img = x.data() + c * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double v = img[i * w + j];
        const double dh = j + 1 < w ? img[i * w + j + 1] - v : 0.0;
        const double dv = i + 1 < h ? img[(i + 1) * w + j] - v : 0.0;
        total += std::sqrt(dh * dh + dv * dv);
      }
    }
  }
  return total;
}

double quality(const QualityMetric& metric, const Tensor& xhat, const Tensor& y) {
  validate(metric);
  const double n = static_cast<double>(xhat.size());
  return std::visit(
      Overloaded{
          [&](const GaussianTV&) { return tv_norm(xhat) / n; },
          [&](const PoissonTV& m) {
            require_same_shape(xhat, y, "quality");
            require_positive(xhat, "PoissonTV");
            double data = 0.0;
            for (std::size_t i = 0; i < xhat.size(); ++i) {
              data += xhat[i] - y[i] * std::log(floored(xhat[i]));
            }
            return (m.alpha * tv_norm(xhat) + data) / n;
          },
          [&](const GammaMAP& m) {
            require_same_shape(xhat, y, "quality");
            require_positive(xhat, "GammaMAP");
            double data = 0.0;
            for (std::size_t i = 0; i < xhat.size(); ++i) {
              const double x = floored(xhat[i]);
              const double r = y[i] / x;
              data += m.alpha * r + 0.5 * m.beta * r * r + m.gamma * std::log(x);
            }
            return (tv_norm(xhat) + data) / n;
          },
      },
      metric);
}

MetricSchedule default_metric_schedule(NoiseFamily family, PoissonWeightSchedule poisson) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return [](double) -> QualityMetric { return GaussianTV{}; };
    case NoiseFamily::kPoisson:
      return [poisson](double zeta) -> QualityMetric { return PoissonTV{poisson.weight(zeta)}; };
    case NoiseFamily::kGamma:
      return [](double) -> QualityMetric { return GammaMAP{}; };
  }
  throw InvalidArgument("default_metric_schedule: unknown family");
}

void GridSpec::validate() const {
  if (!(lower < upper) || !(step > 0.0) || !std::isfinite(upper) || !std::isfinite(lower)) {
    throw InvalidArgument("grid: need lower < upper and step > 0");
  }
  if ((upper - lower) / step < 2.0) throw InvalidArgument("grid: fewer than three points");
}

std::vector<double> GridSpec::points() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((upper - lower) / step + 1e-9)) + 1;
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = lower + static_cast<double>(i) * step;
  return pts;
}

GridSpec parse_grid(std::string_view text) {
  const auto a = text.find(':');
  const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (b == std::string_view::npos) throw InvalidArgument("grid: expected lo:hi:step");
  GridSpec g{parse_number(text.substr(0, a)), parse_number(text.substr(a + 1, b - a - 1)),
             parse_number(text.substr(b + 1))};
  g.validate();
  return g;
}

Tensor restore_at(NoiseFamily family, const Tensor& y, const ScoreField& score, double parameter) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return denoise_gaussian(y, score, parameter);
    case NoiseFamily::kPoisson:
      // y is generally off the candidate's lattice.
      return denoise_poisson(y, CountScore{score}, parameter, LatticeCheck::kOff);
    case NoiseFamily::kGamma:
      return denoise_gamma(y, score, parameter, parameter);
  }
  throw InvalidArgument("restore_at: unknown family");
}

BlindEstimate estimate_parameter(NoiseFamily family, const Tensor& y, const ScoreFn& provider,
                                 const MetricSchedule& metric, const GridSpec& grid) {
  if (!provider) throw InvalidArgument("estimate_parameter: no score provider");
  const std::vector<double> params = grid.points();
  BlindEstimate est;
  std::optional<ScoreField> shared;
  if (family != NoiseFamily::kPoisson) {
    shared = provider(y);
    ++est.score_evaluations;
  }

  std::size_t best = params.size();
  for (std::size_t i = 0; i < params.size(); ++i) {
    CurvePoint pt;
    pt.parameter = params[i];
    try {
      Tensor xhat;
      if (family == NoiseFamily::kPoisson) {
        const ScoreField s = provider((1.0 / params[i]) * y);
        ++est.score_evaluations;
        xhat = restore_at(family, y, s, params[i]);
      } else {
        xhat = restore_at(family, y, *shared, params[i]);
      }
      pt.quality = quality(metric(params[i]), xhat, y);
      if (!std::isfinite(pt.quality)) throw NumericalError("non-finite quality");
      if (best == params.size() || pt.quality < est.curve[best].quality) {
        best = i;
        est.xhat = std::move(xhat);
      }
    } catch (const NumericalError&) {
      pt.singular = true;
      pt.quality = std::numeric_limits<double>::quiet_NaN();
    }
    est.curve.push_back(pt);
  }
  if (best == params.size()) {
    throw EstimationFailed("estimate_parameter: every grid point is singular");
  }
  est.parameter = est.curve[best].parameter;
  est.quality = est.curve[best].quality;
  return est;
}

BlindEstimate estimate_parameter(NoiseFamily family, const Tensor& y, const ScoreFn& provider,
                                 const QualityMetric& metric, const GridSpec& grid) {
  return estimate_parameter(
      family, y, provider, [metric](double) { return metric; }, grid);
}

}  // namespace n2s
