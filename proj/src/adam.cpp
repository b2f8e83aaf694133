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

#include "n2s/adam.hpp"

#include <cmath>

#include "n2s/errors.hpp"

namespace n2s {

AdamState AdamState::for_parameters(const Tensor& params, double lr) {
  AdamState s;
  s.m = Tensor(params.shape(), 0.0);
  s.v = Tensor(params.shape(), 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, Tensor& params, const Tensor& grad) {
  require_same_shape(params, grad, "adam_step");
  require_same_shape(params, state.m, "adam_step (first moment)");
  require_same_shape(params, state.v, "adam_step (second moment)");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace n2s
