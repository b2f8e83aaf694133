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

#ifndef N2S_ADAM_HPP_
#define N2S_ADAM_HPP_

#include <cstdint>

#include "n2s/tensor.hpp"

namespace n2s {

struct AdamState {
  Tensor m;  // first moment
  Tensor v;  // second moment
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 2e-4;

  // Zero moments shaped like the parameters.
  static AdamState for_parameters(const Tensor& params, double lr);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Tensor& params, const Tensor& grad);

}  // namespace n2s

#endif  // N2S_ADAM_HPP_
