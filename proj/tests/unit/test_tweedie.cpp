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
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "n2s/diagnostics.hpp"
#include "n2s/errors.hpp"
#include "n2s/rng.hpp"
#include "n2s/tweedie.hpp"
#include "test_util.hpp"

using namespace n2s;
using n2s::testing::max_rel_diff;

namespace {

Tensor filled(double v, std::size_t n = 1) { return Tensor(Shape{n}, v); }

// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink previous;
  WarningCapture() {
    previous = set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous); }
};

// log of the negative-binomial marginal of y ~ Poisson(x), x ~ Gamma(a, rate b).
double log_negbin(double y, double a, double b) {
  return std::lgamma(y + a) - std::lgamma(a) - std::lgamma(y + 1.0) + a * std::log(b / (1.0 + b)) -
         y * std::log(1.0 + b);
}

// Argmax over a grid of f.
double grid_argmax(double lo, double hi, double step, const std::function<double(double)>& f) {
  double best = lo;
  double best_v = -std::numeric_limits<double>::infinity();
  for (double t = lo; t <= hi; t += step) {
    const double v = f(t);
    if (v > best_v) {
      best_v = v;
      best = t;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("tweedie") {
  TEST_CASE("score fields must be finite and nonempty") {
    CHECK_THROWS_AS(ScoreField{Tensor{}}, InvalidArgument);
    CHECK_THROWS_AS(ScoreField(filled(std::numeric_limits<double>::quiet_NaN())), NumericalError);
    CHECK_THROWS_AS(ScoreField(filled(std::numeric_limits<double>::infinity())), NumericalError);
  }

  TEST_CASE("gaussian estimator") {
    Rng rng(1);
    const Tensor y = sample_normal(rng, {3, 4});
    const ScoreField s(sample_normal(rng, {3, 4}));
    CHECK(denoise_gaussian(y, s, 0.0) == y);
    CHECK_THROWS_AS(denoise_gaussian(y, ScoreField(filled(0.0)), 0.1), ShapeError);
    CHECK_THROWS_AS(denoise_gaussian(y, s, -1.0), InvalidArgument);

    // Marginal N(0, 2): score -y/2 at y = 2, posterior mean tau^2 y / (tau^2 + sigma^2) = 1.
    const ScoreField conj = analytic_score(GaussPrior{0.0, 1.0}, Gaussian{1.0}, filled(2.0));
    CHECK(conj[0] == -1.0);
    CHECK(denoise_gaussian(filled(2.0), conj, 1.0)[0] == 1.0);
  }

  TEST_CASE("point masses are recovered exactly") {
    Rng rng(2);
    Tensor x0(Shape{4, 4});
    for (double& v : x0.values()) v = 0.1 + 0.8 * rng.uniform();
    const PointMass pm{x0};

    const Gaussian g{0.2};
    const Tensor yg = corrupt(g, x0, rng);
    CHECK(max_rel_diff(denoise_gaussian(yg, analytic_score(pm, g, yg), g.sigma), x0) <= 1e-10);

    const Gamma m{20.0, 20.0};
    const Tensor ym = corrupt(m, x0, rng);
    CHECK(max_rel_diff(denoise_gamma(ym, analytic_score(pm, m, ym), m.alpha, m.beta), x0) <=
          1e-10);

    const Tensor ye = corrupt(Exponential{}, x0, rng);
    CHECK(max_rel_diff(denoise_exponential(analytic_score(pm, Exponential{}, ye)), x0) <= 1e-10);

    const Tensor yb = corrupt(Bernoulli{}, x0, rng);
    CHECK(max_rel_diff(denoise_bernoulli(analytic_score(pm, Bernoulli{}, yb)), x0) <= 1e-10);
  }

  TEST_CASE("poisson estimator") {
    CHECK(denoise_poisson(filled(3.0), CountScore{ScoreField(filled(0.0))}, 1.0)[0] == 3.5);
    // Point mass at 4 with unit gain: l'(y) = log 4 - log(y + 1/2) for every count.
    for (int y = 0; y <= 20; ++y) {
      const ScoreField s = analytic_score(PointMass{filled(4.0)}, PoissonGain{1.0}, filled(y));
      CHECK(s[0] == doctest::Approx(std::log(4.0) - std::log(y + 0.5)).epsilon(1e-12));
      CHECK(denoise_poisson(filled(y), CountScore{s}, 1.0)[0] == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(denoise_poisson(filled(1.0), CountScore{ScoreField(filled(0.0))}, 0.0),
                    InvalidArgument);
  }

  TEST_CASE("a different offset constant breaks poisson point-mass recovery") {
    const double zeta = 0.01;
    const Tensor y = filled(0.37);
    const CountScore s{analytic_score(PointMass{filled(0.4)}, PoissonGain{zeta}, (1.0 / zeta) * y)};
    const double exact = detail::denoise_poisson_with_offset(y, s, zeta, 0.5, LatticeCheck::kOff)[0];
    const double mutated = detail::denoise_poisson_with_offset(y, s, zeta, 0.6, LatticeCheck::kOff)[0];
    CHECK(exact == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(std::abs(mutated - 0.4) / 0.4 > 1e-3);
  }

  TEST_CASE("off-lattice poisson input warns once and can be silenced") {
    const CountScore zero{ScoreField(filled(0.0, 3))};
    const Tensor y(Shape{3}, std::vector<double>{0.02, 0.035, 0.041});
    {
      WarningCapture cap;
      denoise_poisson(y, zero, 0.01);
      REQUIRE(cap.messages.size() == 1);
      CHECK(cap.messages[0].find("2 of 3") != std::string::npos);
    }
    {
      WarningCapture cap;
      denoise_poisson(y, zero, 0.01, LatticeCheck::kOff);
      CHECK(cap.messages.empty());
    }
  }

  TEST_CASE("poisson with a gamma prior agrees with the posterior mode in eta") {
    // Score by central differences of the negative-binomial marginal; mode
    // of p(eta | y) with eta = log x by brute force on a grid.
    const double a = 2.0, b = 1.0;
    for (const double y : {60.0, 90.0, 150.0}) {
      CAPTURE(y);
      const double score = 0.5 * (log_negbin(y + 1, a, b) - log_negbin(y - 1, a, b));
      const double xhat = denoise_poisson(filled(y), CountScore{ScoreField(filled(score))}, 1.0)[0];
      const double eta = grid_argmax(-5.0, 6.0, 1e-4, [&](double t) {
        return y * t - std::exp(t) + a * t - b * std::exp(t);
      });
      CHECK(std::abs(xhat - std::exp(eta)) / std::exp(eta) <= 0.01);
    }
  }

  TEST_CASE("gamma estimator") {
    CHECK(denoise_gamma(filled(1.0), ScoreField(filled(0.0)), 101.0, 100.0)[0] == 1.0);
    // Zero score with alpha = beta = k gives y k / (k - 1).
    CHECK(denoise_gamma(filled(0.5), ScoreField(filled(0.0)), 10.0, 10.0)[0] ==
          doctest::Approx(0.5 * 10.0 / 9.0).epsilon(1e-15));
    CHECK(denoise_gamma(filled(0.0), ScoreField(filled(3.0)), 2.0, 1.0)[0] == 0.0);
    CHECK_THROWS_AS(denoise_gamma(filled(-0.1), ScoreField(filled(0.0)), 2.0, 1.0), DataError);
    CHECK_THROWS_AS(denoise_gamma(filled(1.0), ScoreField(filled(0.0)), 1.0, 1.0), InvalidArgument);

    const Tensor y(Shape{3}, std::vector<double>{1.0, 2.0, 1.0});
    const ScoreField s(Tensor(Shape{3}, std::vector<double>{0.0, 1.0, 0.0}));
    try {
      denoise_gamma(y, s, 2.0, 1.0);  // denominator 1 - 2 * 1 < 0 at index 1
      FAIL("expected a singularity");
    } catch (const SingularityError& e) {
      CHECK(e.index() == 1);
    }
  }

  TEST_CASE("gamma noise with a gamma prior on 1/x agrees with the posterior mode") {
    // y = x n, n ~ Gamma(al, rate be); w = 1/x ~ Gamma(c, rate d). The marginal
    // is p(y) ~ y^(al-1) (be y + d)^-(al+c); its score is differenced numerically.
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const double al = 2.0 + 50.0 * rng.uniform();
      const double be = al;
      const double c = 1.0 + 5.0 * rng.uniform();
      const double d = 0.5 + 2.0 * rng.uniform();
      const double y = 0.05 + rng.uniform();
      auto log_marginal = [&](double v) { return (al - 1.0) * std::log(v) - (al + c) * std::log(be * v + d); };
      const double h = 1e-6 * y;
      const double score = (log_marginal(y + h) - log_marginal(y - h)) / (2.0 * h);
      const double xhat = denoise_gamma(filled(y), ScoreField(filled(score)), al, be)[0];
      // Posterior over s = log x: w^(al+c) exp(-(be y + d) w) with w = exp(-s).
      const double s_mode = grid_argmax(-6.0, 6.0, 1e-4, [&](double s) {
        const double w = std::exp(-s);
        return (al + c) * std::log(w) - (be * y + d) * w;
      });
      CHECK(std::abs(xhat - std::exp(s_mode)) / std::exp(s_mode) <= 0.01);
    }
  }

  TEST_CASE("bernoulli and exponential estimators") {
    CHECK(denoise_bernoulli(ScoreField(filled(0.0)))[0] == 0.5);
    CHECK(denoise_bernoulli(ScoreField(filled(std::log(3.0))))[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(denoise_bernoulli(ScoreField(filled(800.0)))[0] == 1.0);
    CHECK(denoise_bernoulli(ScoreField(filled(-800.0)))[0] >= 0.0);
    CHECK(denoise_exponential(ScoreField(filled(-2.5)))[0] == 2.5);
  }

  TEST_CASE("generic canonical solver reproduces the specialised estimators") {
    Rng rng(4);
    const Tensor y = sample_normal(rng, {16});
    const ScoreField s(sample_normal(rng, {16}));

    const Gaussian g{0.3};
    const CanonicalEstimate cg = solve_canonical(g, y, s);
    CHECK(max_rel_diff(cg.xhat, denoise_gaussian(y, s, g.sigma)) <= 1e-13);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(cg.eta[i] == doctest::Approx(y[i] / (g.sigma * g.sigma) + s[i]).epsilon(1e-14));
    }

    Tensor counts(Shape{16});
    for (double& v : counts.values()) v = static_cast<double>(rng.poisson(5.0));
    const CanonicalEstimate cp = solve_canonical(PoissonGain{1.0}, counts, s);
    CHECK(max_rel_diff(cp.xhat, denoise_poisson(counts, CountScore{s}, 1.0)) <= 1e-13);

    CHECK(solve_canonical(Bernoulli{}, y, s).xhat == denoise_bernoulli(s));
    CHECK(solve_canonical(Exponential{}, y, s).xhat == denoise_exponential(s));

    Tensor positive(Shape{16}, 0.5);
    CHECK_THROWS_AS(solve_canonical(Gamma{3.0, 3.0}, positive, s), UnsupportedModel);
    CHECK_THROWS_AS(solve_canonical(GaussianNatural{0.3}, y, s), UnsupportedModel);
  }

  TEST_CASE("two-parameter gaussian form yields the same estimate") {
    // eta = [x / s^2, -1 / (2 s^2)], T(y) = [y, y^2], constant base measure:
    // E[eta_1 | y] + 2 y eta_2 = l'(y), so x_hat = s^2 (l'(y) - 2 y eta_2).
    Rng rng(5);
    const double sigma = 0.25;
    const Tensor y = sample_normal(rng, {32});
    const ScoreField s(sample_normal(rng, {32}));
    const double eta2 = -1.0 / (2.0 * sigma * sigma);
    CHECK(base_score(GaussianNatural{sigma}, y) == Tensor(y.shape(), 0.0));
    const Tensor ours = denoise_gaussian(y, s, sigma);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double two_param = sigma * sigma * (s[i] - 2.0 * y[i] * eta2);
      CHECK(two_param == doctest::Approx(ours[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("mixed poisson-gaussian two-step estimator") {
    Rng rng(6);
    const double zeta = 0.01;
    Tensor y(Shape{8});
    for (double& v : y.values()) v = zeta * static_cast<double>(rng.poisson(40.0));
    const Tensor score_vals = sample_normal(rng, {8});

    int calls = 0;
    const ScoreFn fixed = [&](const Tensor&) {
      ++calls;
      return ScoreField(score_vals);
    };
    const Tensor mixed = denoise_mixed_pg(y, fixed, 0.0, zeta);
    CHECK(calls == 1);
    CHECK(mixed == denoise_poisson(y, CountScore{ScoreField(score_vals)}, zeta));

    // Zero score: step one is the identity and step two adds zeta / 2.
    const ScoreFn zero = [](const Tensor& t) { return ScoreField(Tensor(t.shape(), 0.0)); };
    const Tensor shifted = denoise_mixed_pg(y, zero, 0.1, zeta);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(shifted[i] == doctest::Approx(y[i] + zeta / 2.0).epsilon(1e-15));
    }
  }

  TEST_CASE("mixed estimator recovers a point mass through both steps") {
    Rng rng(7);
    const double zeta = 0.02;
    const double sigma = 0.05;
    Tensor x0(Shape{4, 4});
    for (double& v : x0.values()) v = 0.2 + 0.6 * rng.uniform();
    const Tensor v = corrupt(PoissonGain{zeta}, x0, rng);  // clean Poisson observation
    const Tensor y = corrupt(Gaussian{sigma}, v, rng);

    // First call: Gaussian score of a point mass at v. Second call: Poisson
    // count score of a point mass at x0.
    int call = 0;
    const ScoreFn chain = [&](const Tensor& t) {
      ++call;
      if (call == 1) return analytic_score(PointMass{v}, Gaussian{sigma}, t);
      return analytic_score(PointMass{x0}, PoissonGain{zeta}, t);
    };
    const Tensor xhat = denoise_mixed_pg(y, chain, sigma, zeta);
    CHECK(call == 2);
    CHECK(max_rel_diff(xhat, x0) <= 1e-8);
  }

  TEST_CASE("analytic scores") {
    CHECK(analytic_score(GaussPrior{0.0, 1.0}, Gaussian{1.0}, filled(3.0))[0] == -1.5);
    CHECK(analytic_score(PointMass{filled(1.0)}, Gaussian{0.5}, filled(2.0))[0] == -4.0);
    CHECK(analytic_score(PointMass{filled(2.0)}, Gamma{3.0, 4.0}, filled(0.5))[0] ==
          doctest::Approx(2.0 / 0.5 - 4.0 / 2.0));
    CHECK_THROWS_AS(analytic_score(GaussPrior{0.0, 0.0}, Gaussian{1.0}, filled(1.0)),
                    InvalidArgument);
    CHECK_THROWS_AS(analytic_score(GaussPrior{0.0, 1.0}, PoissonGain{1.0}, filled(1.0)),
                    InvalidArgument);
    CHECK_THROWS_AS(analytic_score(PointMass{filled(0.5, 2)}, Gaussian{1.0}, filled(1.0, 3)),
                    ShapeError);
  }
}
