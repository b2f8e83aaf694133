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

#ifndef N2S_RNG_HPP_
#define N2S_RNG_HPP_

#include <cstdint>
#include <optional>
#include <random>

#include "n2s/tensor.hpp"

namespace n2s {

// Seedable generator with a fully specified sample path.
//
// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
// standard. The engine is keyed with std::seed_seq over the four 32-bit words
// of (seed, stream), which is also bit-exact across conforming libraries.
// All continuous variates are derived here rather than through the
// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent generator for parallel work item `index`. Depends only on
  // (seed, stream, index), never on how much this generator has been used.
  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1); safe to take the log of.
  double uniform_open();
  // Standard normal by the Box-Muller transform. Pairs are generated together
  // and the second value is cached for the next call.
  double normal();
  // Gamma(shape, rate); see sample_gamma.
  double gamma(double shape, double rate);
  // Poisson(rate); see sample_poisson.
  std::uint64_t poisson(double rate);

  // Index in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

// Rates at or above this use transformed rejection instead of inversion.
inline constexpr double kPoissonRejectionThreshold = 30.0;

// I.i.d. N(0, 1) entries.
Tensor sample_normal(Rng& rng, const Shape& shape);

// Elementwise Poisson(rate[i]). Small rates use sequential inversion of the
// CDF; rates >= kPoissonRejectionThreshold use Hormann's PTRS transformed
// rejection with squeeze (W. Hormann, "The transformed rejection method for
// generating Poisson random variables", 1993).
Tensor sample_poisson(Rng& rng, const Tensor& rate);

// I.i.d. Gamma(alpha, rate beta) entries, mean alpha / beta. Uses the
// Marsaglia-Tsang squeeze/accept scheme over a normal proposal; shapes below
// one are boosted through Gamma(alpha + 1) * U^(1/alpha).
Tensor sample_gamma(Rng& rng, double alpha, double beta, const Shape& shape);

}  // namespace n2s

#endif  // N2S_RNG_HPP_
