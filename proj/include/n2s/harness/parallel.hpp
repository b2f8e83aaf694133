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


#ifndef N2S_HARNESS_PARALLEL_HPP_
#define N2S_HARNESS_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace n2s {

// N2S_THREADS if set, otherwise the hardware concurrency (at least 1).
std::size_t worker_count();

// Calls body(i) for i in [0, n) on up to `workers` threads. Every index runs
// even if some throw; afterwards the exception of the lowest failing index is
// rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = worker_count());

}  // namespace n2s

#endif  // N2S_HARNESS_PARALLEL_HPP_
