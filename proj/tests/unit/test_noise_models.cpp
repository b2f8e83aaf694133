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


#include <cmath>
#include <numbers>

#include "doctest.h"
#include "n2s/errors.hpp"
#include "n2s/noise_models.hpp"
#include "n2s/rng.hpp"

using namespace n2s;

namespace {

// Sample mean and variance of all entries.
std::pair<double, double> mean_var(const Tensor& t) {
  double s1 = 0.0, s2 = 0.0;
  for (double v : t.values()) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(t.size());
  const double m = s1 / n;
  return {m, s2 / n - m * m};
}

}  // namespace

TEST_SUITE("noise_models") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate(Gaussian{0.0}));
    CHECK_THROWS_AS(validate(Gaussian{-0.1}), InvalidArgument);
    CHECK_THROWS_AS(validate(PoissonGain{0.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(Gamma{1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(Gamma{2.0, 0.0}), InvalidArgument);
    CHECK_NOTHROW(validate(Bernoulli{}));
  }

  TEST_CASE("noise spec parsing") {
    const auto g = std::get<Gaussian>(parse_noise_model("gaussian:sigma=25"));
    CHECK(g.sigma == doctest::Approx(25.0 / 255.0).epsilon(1e-15));
    CHECK(std::get<PoissonGain>(parse_noise_model("poisson:zeta=0.01")).zeta == 0.01);
    const auto k = std::get<Gamma>(parse_noise_model("gamma:k=100"));
    CHECK(k.alpha == 100.0);
    CHECK(k.beta == 100.0);
    const auto ab = std::get<Gamma>(parse_noise_model("gamma:alpha=3,beta=2"));
    CHECK(ab.alpha == 3.0);
    CHECK(ab.beta == 2.0);
    CHECK(std::holds_alternative<Bernoulli>(parse_noise_model("bernoulli")));
    CHECK(std::holds_alternative<Exponential>(parse_noise_model("exponential")));
    CHECK_THROWS_AS(parse_noise_model("laplace:b=1"), InvalidArgument);
    CHECK_THROWS_AS(parse_noise_model("gaussian"), InvalidArgument);
    CHECK_THROWS_AS(parse_noise_model("gaussian:sigma=abc"), InvalidArgument);
    CHECK_THROWS_AS(parse_noise_model("poisson:zeta=0"), InvalidArgument);
    CHECK_THROWS_AS(parse_noise_model("gamma:k=1"), InvalidArgument);
    CHECK_THROWS_AS(parse_noise_model("poisson:zeta=0.1,sigma=2"), InvalidArgument);
  }

  TEST_CASE("gaussian with sigma 0 returns the image unchanged") {
    Rng rng(1);
    const Tensor x = sample_normal(rng, {4, 4});
    CHECK(corrupt(Gaussian{0.0}, x, rng) == x);
  }

  TEST_CASE("gaussian sample mean at n = 1e6") {
    Rng rng(2);
    const Tensor x(Shape{1000, 1000}, 0.5);
    const auto [m, v] = mean_var(corrupt(Gaussian{25.0 / 255.0}, x, rng));
    CHECK(std::abs(m - 0.5) <= 4e-4);
    CHECK(std::abs(std::sqrt(v) - 25.0 / 255.0) < 1e-3);
  }

  TEST_CASE("poisson gain moments within CLT bands at n = 1e6") {
    Rng rng(3);
    const double zeta = 0.01;
    const double x = 0.5;
    const std::size_t n = 1000000;
    const Tensor y = corrupt(PoissonGain{zeta}, Tensor(Shape{n}, x), rng);
    const auto [m, v] = mean_var(y);
    // y = zeta z with z ~ Poisson(lambda): Var y = zeta x and the sample
    // variance has variance zeta^4 (lambda + 2 lambda^2) / n.
    const double lambda = x / zeta;
    CHECK(std::abs(m - x) <= 3.0 * std::sqrt(zeta * x / n));
    const double var_se = std::pow(zeta, 2) * std::sqrt((lambda + 2 * lambda * lambda) / n);
    CHECK(std::abs(v - zeta * x) <= 3.0 * var_se);
  }

  TEST_CASE("poisson gain output lies on the lattice") {
    Rng rng(4);
    const double zeta = 0.01;
    Tensor x(Shape{64, 64});
    for (double& v : x.values()) v = rng.uniform();
    const Tensor y = corrupt(PoissonGain{zeta}, x, rng);
    for (double v : y.values()) {
      const double z = v / zeta;
      REQUIRE(std::abs(z - std::round(z)) <= 1e-9);
    }
  }

  TEST_CASE("unit-mean models preserve the mean") {
    const std::size_t n = 1000000;
    const double x = 0.3;
    Rng rng(5);
    const Tensor flat(Shape{n}, x);
    {
      // Gamma(k, k) multiplier has variance 1 / k.
      const double k = 4.0;
      const auto [m, v] = mean_var(corrupt(Gamma{k, k}, flat, rng));
      CHECK(std::abs(m - x) <= 4.0 * x * std::sqrt(1.0 / (k * n)));
      CHECK(std::abs(v - x * x / k) < 0.02 * x * x / k);
    }
    {
      const auto [m, v] = mean_var(corrupt(Bernoulli{}, flat, rng));
      CHECK(std::abs(m - x) <= 4.0 * std::sqrt(x * (1 - x) / n));
    }
    {
      // Exponential with rate x has mean 1 / x.
      const auto [m, v] = mean_var(corrupt(Exponential{}, flat, rng));
      CHECK(std::abs(m - 1.0 / x) <= 4.0 * (1.0 / x) / std::sqrt(n));
    }
  }

  TEST_CASE("base measure scores") {
    const Tensor y(Shape{1}, 2.0);
    CHECK(base_score(Gamma{3.0, 2.0}, y)[0] == 0.0);
    CHECK(base_score(PoissonGain{1.0}, Tensor(Shape{1}, 0.0))[0] == doctest::Approx(std::log(2.0)));
    CHECK(base_score(Gaussian{1.0}, y)[0] == -2.0);
    CHECK(base_score(GaussianNatural{1.0}, y)[0] == 0.0);
    CHECK(base_score(Bernoulli{}, y)[0] == 0.0);
    CHECK(base_score(Exponential{}, y)[0] == 0.0);
    CHECK_THROWS_AS(base_score(PoissonGain{1.0}, Tensor(Shape{1}, -1.0)), DataError);
  }

  TEST_CASE("gaussian base score is linear in y") {
    Rng rng(6);
    const Tensor a = sample_normal(rng, {32});
    const Tensor b = sample_normal(rng, {32});
    const Gaussian g{0.3};
    const Tensor lhs = base_score(g, a + b);
    const Tensor rhs = base_score(g, a) + base_score(g, b);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-14));
    CHECK(base_score(g, 2.0 * a) == 2.0 * base_score(g, a));
  }

  TEST_CASE("log likelihood reference values") {
    const Tensor x(Shape{3}, std::vector<double>{0.2, 1.0, -0.4});
    CHECK(log_likelihood(Gaussian{1.0}, x, x) ==
          doctest::Approx(-1.5 * std::log(2.0 * std::numbers::pi)));
    CHECK(log_likelihood(PoissonGain{1.0}, Tensor(Shape{1}, 0.0), Tensor(Shape{1}, 1.0)) ==
          doctest::Approx(-1.0));
    // alpha = 1 itself is outside the model's domain; approach it from above.
    CHECK(log_likelihood(Gamma{1.0 + 1e-12, 1.0}, Tensor(Shape{1}, 2.0), Tensor(Shape{1}, 1.0)) ==
          doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(log_likelihood(Exponential{}, Tensor(Shape{1}, 2.0), Tensor(Shape{1}, 3.0)) ==
          doctest::Approx(std::log(3.0) - 6.0));
    CHECK(log_likelihood(Bernoulli{}, Tensor(Shape{2}, std::vector<double>{1.0, 0.0}),
                         Tensor(Shape{2}, 0.25)) == doctest::Approx(std::log(0.25) + std::log(0.75)));
    CHECK_THROWS_AS(log_likelihood(Bernoulli{}, Tensor(Shape{1}, 0.5), Tensor(Shape{1}, 0.5)),
                    DataError);
  }

  TEST_CASE("poisson likelihood sums to one over the support") {
    for (const double x : {0.05, 0.7, 3.0}) {
      double total = 0.0;
      for (int y = 0; y <= 50; ++y) {
        total += std::exp(log_likelihood(PoissonGain{1.0}, Tensor(Shape{1}, y), Tensor(Shape{1}, x)));
      }
      CHECK(std::abs(total - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("gamma density integrates to one") {
    // Trapezoid rule over y for a fixed x; the density includes the 1/x factor.
    const Gamma m{5.0, 5.0};
    const double x = 0.6;
    double total = 0.0;
    const double h = 1e-4;
    for (double y = h; y < 10.0; y += h) {
      total += h * std::exp(log_likelihood(m, Tensor(Shape{1}, y), Tensor(Shape{1}, x)));
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}
