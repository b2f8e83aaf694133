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


#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "n2s/errors.hpp"
#include "n2s/net.hpp"
#include "n2s/rng.hpp"
#include "test_util.hpp"

using namespace n2s;
using n2s::testing::max_abs_diff;

namespace {

// Direct convolution with replicated borders, walking the flat parameter
// layout weights[out][in][ky][kx] then bias[out] layer by layer.
Tensor reference_forward(const LayerSpec& spec, const Tensor& params, const Tensor& image) {
  const std::size_t h = image.extent(1), w = image.extent(2);
  const int k = static_cast<int>(spec.kernel);
  const int r = k / 2;
  std::vector<double> cur(image.values().begin(), image.values().end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t cin = spec.channels[l], cout = spec.channels[l + 1];
    const double* wt = params.data() + offset;
    const double* bias = wt + cout * cin * k * k;
    offset += cout * cin * k * k + cout;
    std::vector<double> next(cout * h * w, 0.0);
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          double acc = bias[o];
          for (std::size_t c = 0; c < cin; ++c) {
            for (int dy = -r; dy <= r; ++dy) {
              for (int dx = -r; dx <= r; ++dx) {
                const long yi = std::clamp<long>(static_cast<long>(i) + dy, 0, h - 1);
                const long xj = std::clamp<long>(static_cast<long>(j) + dx, 0, w - 1);
                acc += wt[((o * cin + c) * k + (dy + r)) * k + (dx + r)] * cur[(c * h + yi) * w + xj];
              }
            }
          }
          const bool last = l + 1 == spec.layer_count();
          next[(o * h + i) * w + j] =
              (!last && spec.activation == Activation::kRelu) ? std::max(acc, 0.0) : acc;
        }
      }
    }
    cur = std::move(next);
  }
  return Tensor(image.shape(), cur);
}

ResidualNet random_net(const LayerSpec& spec, std::uint64_t seed) {
  ResidualNet net(spec);
  Rng rng(seed);
  Tensor p = sample_normal(rng, {parameter_count(spec)});
  net.set_parameters((0.3) * p);
  return net;
}

}  // namespace

TEST_SUITE("net") {
  TEST_CASE("reference architecture and parameter count") {
    const LayerSpec spec = reference_architecture(1);
    CHECK(spec.channels == std::vector<std::uint32_t>{1, 48, 48, 48, 48, 1});
    CHECK(spec.kernel == 3);
    CHECK(spec.activation == Activation::kRelu);
    const std::size_t expected = (1 * 48 * 9 + 48) + 3 * (48 * 48 * 9 + 48) + (48 * 1 * 9 + 1);
    CHECK(parameter_count(spec) == expected);
    CHECK(reference_architecture(3, 16, 2).channels == std::vector<std::uint32_t>{3, 16, 3});
    CHECK_THROWS_AS(reference_architecture(1, 48, 0), InvalidArgument);
  }

  TEST_CASE("invalid layer specs") {
    CHECK_THROWS_AS(validate(LayerSpec{{1}, 3, Activation::kRelu}), InvalidArgument);
    CHECK_THROWS_AS(validate(LayerSpec{{1, 0, 1}, 3, Activation::kRelu}), InvalidArgument);
    CHECK_THROWS_AS(validate(LayerSpec{{1, 4, 1}, 2, Activation::kRelu}), InvalidArgument);
    CHECK_THROWS_AS(validate(LayerSpec{{1, 4, 1}, 3, static_cast<Activation>(7)}), InvalidArgument);
  }

  TEST_CASE("a zero network outputs zeros") {
    const ResidualNet net(reference_architecture(1, 8, 3));
    Rng rng(1);
    const Tensor y = sample_normal(rng, {1, 9, 7});
    CHECK(net.forward(y) == Tensor(y.shape(), 0.0));
  }

  TEST_CASE("initialization is bounded and deterministic") {
    const LayerSpec spec = reference_architecture(1, 8, 3);
    ResidualNet a(spec), b(spec);
    Rng ra(5), rb(5);
    a.initialize(ra);
    b.initialize(rb);
    CHECK(a.parameters() == b.parameters());
    // First layer: fan_in = 9, fan_out = 72; biases zero.
    const double bound = std::sqrt(6.0 / (9.0 + 72.0));
    for (std::size_t i = 0; i < 72; ++i) CHECK(std::abs(a.parameters()[i]) <= bound);
    for (std::size_t i = 72; i < 80; ++i) CHECK(a.parameters()[i] == 0.0);
  }

  TEST_CASE("forward matches a direct convolution") {
    for (const LayerSpec& spec : {LayerSpec{{2, 5, 3, 2}, 3, Activation::kRelu},
                                  LayerSpec{{1, 4, 1}, 5, Activation::kRelu},
                                  LayerSpec{{3, 3}, 1, Activation::kNone},
                                  LayerSpec{{1, 6, 1}, 3, Activation::kNone}}) {
      CAPTURE(spec.to_string());
      const ResidualNet net = random_net(spec, 11);
      Rng rng(12);
      for (const auto& hw : {std::pair<std::size_t, std::size_t>{6, 9}, {1, 1}, {1, 5}, {4, 1}}) {
        const Tensor y = sample_normal(rng, {spec.in_channels(), hw.first, hw.second});
        CHECK(max_abs_diff(net.forward(y), reference_forward(spec, net.parameters(), y)) <= 1e-12);
      }
    }
  }

  TEST_CASE("batched forward equals per-item forward") {
    const ResidualNet net = random_net(LayerSpec{{1, 4, 4, 1}, 3, Activation::kRelu}, 3);
    Rng rng(4);
    const Tensor batch = sample_normal(rng, {3, 1, 5, 6});
    const Tensor out = net.forward(batch);
    REQUIRE(out.shape() == batch.shape());
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(max_abs_diff(out.slice_copy(b), net.forward(batch.slice_copy(b))) <= 1e-13);
    }
  }

  TEST_CASE("shape errors") {
    const ResidualNet net(LayerSpec{{1, 4, 1}, 3, Activation::kRelu});
    CHECK_THROWS_AS(net.forward(Tensor(Shape{2, 4, 4})), ShapeError);
    CHECK_THROWS_AS(net.forward(Tensor(Shape{4, 4})), ShapeError);
    const ResidualNet odd(LayerSpec{{1, 4, 2}, 3, Activation::kRelu});
    CHECK_THROWS_AS(odd.forward(Tensor(Shape{1, 4, 4})), ShapeError);
    ResidualNet mutable_net(LayerSpec{{1, 4, 1}, 3, Activation::kRelu});
    CHECK_THROWS_AS(mutable_net.set_parameters(Tensor(Shape{3})), ShapeError);
  }

  TEST_CASE("backward matches finite differences of <g, R(y)>") {
    for (const std::size_t size : {std::size_t{1}, std::size_t{5}}) {
      CAPTURE(size);
      const LayerSpec spec{{2, 4, 3, 2}, 3, Activation::kRelu};
      ResidualNet net = random_net(spec, 21);
      Rng rng(22);
      const Tensor y = sample_normal(rng, {2, 2, size, size + 1});
      const Tensor g = sample_normal(rng, y.shape());
      const Tensor grad = net.backward(y, g);
      REQUIRE(grad.size() == parameter_count(spec));
      const double h = 1e-6;
      double worst = 0.0;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        Tensor p = net.parameters();
        const double saved = p[i];
        p[i] = saved + h;
        net.set_parameters(p);
        const double up = dot(g, net.forward(y));
        p[i] = saved - h;
        net.set_parameters(p);
        const double down = dot(g, net.forward(y));
        p[i] = saved;
        net.set_parameters(p);
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1.0}));
      }
      CHECK(worst <= 1e-6);
    }
  }

  TEST_CASE("forward_backward agrees with forward then backward") {
    const ResidualNet net = random_net(LayerSpec{{1, 6, 6, 1}, 3, Activation::kRelu}, 31);
    Rng rng(32);
    const Tensor y = sample_normal(rng, {2, 1, 7, 5});
    const Tensor g = sample_normal(rng, y.shape());
    Tensor seen;
    const auto eval = net.forward_backward(y, [&](const Tensor& out) {
      seen = out;
      return g;
    });
    CHECK(eval.output == net.forward(y));
    CHECK(seen == eval.output);
    CHECK(max_abs_diff(eval.grad, net.backward(y, g)) <= 1e-13);
  }

  TEST_CASE("parameter files round trip at float32 precision") {
    testing::TempDir dir("net");
    const LayerSpec spec{{3, 5, 3}, 3, Activation::kNone};
    const ResidualNet net = random_net(spec, 41);
    save_params(dir / "p.bin", net);
    const ResidualNet back = load_params(dir / "p.bin");
    CHECK(back.spec() == spec);
    for (std::size_t i = 0; i < net.parameters().size(); ++i) {
      CHECK(back.parameters()[i] == static_cast<double>(static_cast<float>(net.parameters()[i])));
    }

    ResidualNet same(spec);
    load_params(dir / "p.bin", same);
    CHECK(same.parameters() == back.parameters());
    ResidualNet other(LayerSpec{{3, 4, 3}, 3, Activation::kNone});
    CHECK_THROWS_AS(load_params(dir / "p.bin", other), DataError);
  }

  TEST_CASE("damaged parameter files") {
    testing::TempDir dir("net-bad");
    CHECK_THROWS_AS(load_params(dir / "missing.bin"), DataError);
    save_params(dir / "p.bin", ResidualNet(LayerSpec{{1, 2, 1}, 3, Activation::kRelu}));
    std::string bytes;
    {
      std::ifstream is(dir / "p.bin", std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(is), {});
    }
    auto write = [&](const std::string& name, const std::string& content) {
      std::ofstream os(dir / name, std::ios::binary);
      os << content;
      return dir / name;
    };
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_params(write("m.bin", bad_magic)), FormatError);
    std::string bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(load_params(write("v.bin", bad_version)), FormatError);
    CHECK_THROWS_AS(load_params(write("t.bin", bytes.substr(0, bytes.size() - 3))), FormatError);
    CHECK_THROWS_AS(load_params(write("h.bin", bytes.substr(0, 3))), FormatError);
  }
}
