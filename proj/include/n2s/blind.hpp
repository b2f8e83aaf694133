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

#ifndef N2S_BLIND_HPP_
#define N2S_BLIND_HPP_

#include <cstddef>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

#include "n2s/tensor.hpp"
#include "n2s/training.hpp"
#include "n2s/tweedie.hpp"

namespace n2s {

// Q(x) = TV(x).
struct GaussianTV {};
// Q(x) = alpha TV(x) + sum(x - y log x).
struct PoissonTV {
  double alpha = 0.1;
};
// Q(x) = TV(x) + sum(alpha y/x + beta/2 (y/x)^2 + gamma log x), alpha + beta = gamma.
struct GammaMAP {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 1.0;
};
using QualityMetric = std::variant<GaussianTV, PoissonTV, GammaMAP>;

void validate(const QualityMetric& metric);

// Isotropic total variation: sum over pixels of sqrt(dh^2 + dv^2) with
// forward differences that vanish past the last row/column. Takes [H,W] or
// [C,H,W] (channels summed).
double tv_norm(const Tensor& x);

// Pixels of x below this are raised to it inside log and ratio terms.
inline constexpr double kQualityFloor = 1e-6;

// Penalty of a candidate restoration x_hat of y, lower is better. All terms
// are summed over pixels and divided by the pixel count.
double quality(const QualityMetric& metric, const Tensor& xhat, const Tensor& y);

// TV weight for the Poisson metric as a function of the candidate gain:
// `small` up to and including `switch_zeta`, `large` above it.
struct PoissonWeightSchedule {
  double small = 0.1;
  double large = 0.25;
  double switch_zeta = 0.02;
  double weight(double zeta) const { return zeta <= switch_zeta ? small : large; }
};

// Metric to use at a given candidate parameter.
using MetricSchedule = std::function<QualityMetric(double)>;

// GaussianTV; PoissonTV weighted by `poisson`; GammaMAP(0.5, 0.5, 1).
MetricSchedule default_metric_schedule(NoiseFamily family, PoissonWeightSchedule poisson = {});

struct GridSpec {
  double lower = 0.0;
  double upper = 1.0;
  double step = 0.1;

  void validate() const;
  // lower, lower + step, ... up to upper inclusive (within 1e-9 steps).
  std::vector<double> points() const;
};

// "lo:hi:step"
GridSpec parse_grid(std::string_view text);

struct CurvePoint {
  double parameter = 0.0;
  double quality = 0.0;
  bool singular = false;
};

struct BlindEstimate {
  double parameter = 0.0;
  double quality = 0.0;
  Tensor xhat;
  std::vector<CurvePoint> curve;
  std::size_t score_evaluations = 0;
};

// Grid search for the noise parameter minimizing Q(x_hat(param)).
//  - Gaussian: param is sigma on the [0,1] intensity scale; one score
//    evaluation at y is reused for every candidate.
//  - Gamma: param is k with alpha = beta = k; one score evaluation at y.
//  - Poisson: param is zeta; the provider is called at y / zeta for every
//    candidate.
// Candidates whose estimator is singular are kept in the curve with
// singular = true. Ties go to the smaller parameter.
BlindEstimate estimate_parameter(NoiseFamily family, const Tensor& y, const ScoreFn& provider,
                                 const MetricSchedule& metric, const GridSpec& grid);
BlindEstimate estimate_parameter(NoiseFamily family, const Tensor& y, const ScoreFn& provider,
                                 const QualityMetric& metric, const GridSpec& grid);

// Restoration at a fixed parameter, as used inside the grid search.
Tensor restore_at(NoiseFamily family, const Tensor& y, const ScoreField& score, double parameter);

}  // namespace n2s

#endif  // N2S_BLIND_HPP_
