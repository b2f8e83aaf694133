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

#ifndef N2S_NET_HPP_
#define N2S_NET_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "n2s/rng.hpp"
#include "n2s/tensor.hpp"

namespace n2s {

enum class Activation : std::uint32_t { kNone = 0, kRelu = 1 };

// Stack of stride-1 convolutions with edge-replicated "same" padding.
// channels = {C_in, c1, ..., C_out}; the activation is applied between
// layers, never after the last one.
struct LayerSpec {
  std::vector<std::uint32_t> channels;
  std::uint32_t kernel = 3;
  Activation activation = Activation::kRelu;

  std::size_t layer_count() const { return channels.empty() ? 0 : channels.size() - 1; }
  std::uint32_t in_channels() const { return channels.front(); }
  std::uint32_t out_channels() const { return channels.back(); }
  std::string to_string() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// C -> 48 -> 48 -> 48 -> 48 -> C, 3x3 kernels, ReLU.
LayerSpec reference_architecture(std::uint32_t image_channels, std::uint32_t width = 48,
                                 std::uint32_t layers = 5);

// Throws InvalidArgument for an empty stack, zero channels or an even kernel.
void validate(const LayerSpec& spec);
std::size_t parameter_count(const LayerSpec& spec);

// The residual score model R(y). Parameters are one flat tensor laid out
// layer by layer as weights[out][in][ky][kx] followed by bias[out].
class ResidualNet {
 public:
  // All parameters zero.
  explicit ResidualNet(LayerSpec spec);

  const LayerSpec& spec() const { return spec_; }
  const Tensor& parameters() const { return params_; }
  Tensor& parameters() { return params_; }
  void set_parameters(Tensor params);

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void initialize(Rng& rng);

  // Input [C, H, W] or a batch [B, C, H, W]; output has the input's shape.
  Tensor forward(const Tensor& y) const;

  // Gradient of <upstream, forward(y)> with respect to the parameters.
  Tensor backward(const Tensor& y, const Tensor& upstream) const;

  struct Evaluation {
    Tensor output;
    Tensor grad;
  };
  // One pass for losses whose upstream gradient depends on the output.
  Evaluation forward_backward(const Tensor& y,
                              const std::function<Tensor(const Tensor&)>& upstream_of) const;

 private:
  LayerSpec spec_;
  Tensor params_;
};

// "N2SP" | version 0x01 | u32 kernel | u32 activation | u32 channel count
// | channel counts (u32 each) | u32 parameter count | float32 parameters,
// all little-endian.
void save_params(const std::filesystem::path& path, const ResidualNet& net);
ResidualNet load_params(const std::filesystem::path& path);
// Loads into an existing net; the stored spec must equal net.spec().
void load_params(const std::filesystem::path& path, ResidualNet& net);

}  // namespace n2s

#endif  // N2S_NET_HPP_
