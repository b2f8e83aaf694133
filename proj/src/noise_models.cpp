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

#include "n2s/noise_models.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "n2s/errors.hpp"

namespace n2s {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void support_error(const char* model, std::size_t i, const char* what) {
  throw DataError(std::string(model) + ": " + what + " at index " + std::to_string(i));
}

double parse_double(std::string_view text, std::string_view key) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("noise spec: bad value for '" + std::string(key) + "': '" +
                          std::string(text) + "'");
  }
  return v;
}

}  // namespace

void validate(const NoiseModel& model) {
  std::visit(Overloaded{
                 [](const Gaussian& m) {
                   if (!(m.sigma >= 0.0) || !std::isfinite(m.sigma)) {
                     throw InvalidArgument("gaussian: sigma must be finite and >= 0");
                   }
                 },
                 [](const GaussianNatural& m) {
                   if (!(m.sigma > 0.0) || !std::isfinite(m.sigma)) {
                     throw InvalidArgument("gaussian (natural form): sigma must be > 0");
                   }
                 },
                 [](const PoissonGain& m) {
                   if (!(m.zeta > 0.0) || !std::isfinite(m.zeta)) {
                     throw InvalidArgument("poisson: zeta must be > 0");
                   }
                 },
                 [](const Gamma& m) {
                   if (!(m.alpha > 1.0) || !std::isfinite(m.alpha)) {
                     throw InvalidArgument("gamma: alpha must be > 1");
                   }
                   if (!(m.beta > 0.0) || !std::isfinite(m.beta)) {
                     throw InvalidArgument("gamma: beta must be > 0");
                   }
                 },
                 [](const Bernoulli&) {},
                 [](const Exponential&) {},
             },
             model);
}

std::string describe(const NoiseModel& model) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Gaussian& m) { os << "gaussian(sigma=" << m.sigma << ")"; },
                 [&](const GaussianNatural& m) {
                   os << "gaussian-natural(sigma=" << m.sigma << ")";
                 },
                 [&](const PoissonGain& m) { os << "poisson(zeta=" << m.zeta << ")"; },
                 [&](const Gamma& m) {
                   os << "gamma(alpha=" << m.alpha << ",beta=" << m.beta << ")";
                 },
                 [&](const Bernoulli&) { os << "bernoulli"; },
                 [&](const Exponential&) { os << "exponential"; },
             },
             model);
  return os.str();
}

NoiseModel parse_noise_model(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view family = spec.substr(0, colon);
  std::map<std::string, double, std::less<>> args;
  if (colon != std::string_view::npos) {
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw InvalidArgument("noise spec: expected key=value, got '" + std::string(item) + "'");
      }
      const std::string_view key = item.substr(0, eq);
      args[std::string(key)] = parse_double(item.substr(eq + 1), key);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  auto take = [&](const char* key) {
    auto it = args.find(key);
    if (it == args.end()) {
      throw InvalidArgument("noise spec '" + std::string(spec) + "': missing '" + key + "'");
    }
    const double v = it->second;
    args.erase(it);
    return v;
  };

  NoiseModel model;
  if (family == "gaussian") {
    model = Gaussian{take("sigma") / 255.0};
  } else if (family == "poisson") {
    model = PoissonGain{take("zeta")};
  } else if (family == "gamma") {
    if (args.count("k")) {
      const double k = take("k");
      model = Gamma{k, k};
    } else {
      const double a = take("alpha");
      model = Gamma{a, take("beta")};
    }
  } else if (family == "bernoulli") {
    model = Bernoulli{};
  } else if (family == "exponential") {
    model = Exponential{};
  } else {
    throw InvalidArgument("noise spec: unknown family '" + std::string(family) + "'");
  }
  if (!args.empty()) {
    throw InvalidArgument("noise spec '" + std::string(spec) + "': unexpected key '" +
                          args.begin()->first + "'");
  }
  validate(model);
  return model;
}

Tensor corrupt(const NoiseModel& model, const Tensor& x, Rng& rng) {
  validate(model);
  if (x.empty()) throw InvalidArgument("corrupt: empty image");
  Tensor y(x.shape());
  auto additive = [&](double sigma) {
    if (sigma == 0.0) {
      y = x;
      return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + sigma * rng.normal();
  };
  std::visit(Overloaded{
                 [&](const Gaussian& m) { additive(m.sigma); },
                 [&](const GaussianNatural& m) { additive(m.sigma); },
                 [&](const PoissonGain& m) {
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     if (!(x[i] >= 0.0)) support_error("poisson", i, "negative intensity");
                     y[i] = m.zeta * static_cast<double>(rng.poisson(x[i] / m.zeta));
                   }
                 },
                 [&](const Gamma& m) {
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     y[i] = x[i] * rng.gamma(m.alpha, m.beta);
                   }
                 },
                 [&](const Bernoulli&) {
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
                       support_error("bernoulli", i, "probability outside [0,1]");
                     }
                     y[i] = rng.uniform() < x[i] ? 1.0 : 0.0;
                   }
                 },
                 [&](const Exponential&) {
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     if (!(x[i] > 0.0)) support_error("exponential", i, "nonpositive rate");
                     y[i] = -std::log(rng.uniform_open()) / x[i];
                   }
                 },
             },
             model);
  return y;
}

Tensor base_score(const NoiseModel& model, const Tensor& y) {
  validate(model);
  if (y.empty()) throw InvalidArgument("base_score: empty tensor");
  Tensor out(y.shape(), 0.0);
  std::visit(Overloaded{
                 [&](const Gaussian& m) {
                   if (m.sigma == 0.0) throw InvalidArgument("base_score: gaussian sigma is 0");
                   const double inv_var = 1.0 / (m.sigma * m.sigma);
                   for (std::size_t i = 0; i < y.size(); ++i) out[i] = -y[i] * inv_var;
                 },
                 [&](const PoissonGain& m) {
                   for (std::size_t i = 0; i < y.size(); ++i) {
                     if (!(y[i] >= 0.0)) support_error("poisson", i, "negative observation");
                     out[i] = -std::log(y[i] / m.zeta + 0.5);
                   }
                 },
                 [](const auto&) {},
             },
             model);
  return out;
}

double log_likelihood(const NoiseModel& model, const Tensor& y, const Tensor& x) {
  validate(model);
  require_same_shape(y, x, "log_likelihood");
  double total = 0.0;
  auto gaussian = [&](double sigma) {
    if (sigma == 0.0) throw InvalidArgument("log_likelihood: gaussian sigma is 0");
    const double c = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = (y[i] - x[i]) / sigma;
      total += c - 0.5 * r * r;
    }
  };
  std::visit(
      Overloaded{
          [&](const Gaussian& m) { gaussian(m.sigma); },
          [&](const GaussianNatural& m) { gaussian(m.sigma); },
          [&](const PoissonGain& m) {
            for (std::size_t i = 0; i < y.size(); ++i) {
              if (!(x[i] > 0.0)) support_error("poisson", i, "nonpositive intensity");
              if (!(y[i] >= 0.0)) support_error("poisson", i, "negative observation");
              const double z = y[i] / m.zeta;
              const double rate = x[i] / m.zeta;
              total += z * std::log(rate) - rate - std::lgamma(z + 1.0);
            }
          },
          [&](const Gamma& m) {
            // Density of y = x n includes the 1/x Jacobian.
            const double c = m.alpha * std::log(m.beta) - std::lgamma(m.alpha);
            for (std::size_t i = 0; i < y.size(); ++i) {
              if (!(x[i] > 0.0)) support_error("gamma", i, "nonpositive intensity");
              if (!(y[i] > 0.0)) support_error("gamma", i, "nonpositive observation");
              const double r = y[i] / x[i];
              total += c + (m.alpha - 1.0) * std::log(r) - m.beta * r - std::log(x[i]);
            }
          },
          [&](const Bernoulli&) {
            for (std::size_t i = 0; i < y.size(); ++i) {
              if (y[i] != 0.0 && y[i] != 1.0) support_error("bernoulli", i, "observation not 0/1");
              if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
                support_error("bernoulli", i, "probability outside [0,1]");
              }
              total += y[i] == 1.0 ? std::log(x[i]) : std::log1p(-x[i]);
            }
          },
          [&](const Exponential&) {
            for (std::size_t i = 0; i < y.size(); ++i) {
              if (!(x[i] > 0.0)) support_error("exponential", i, "nonpositive rate");
              if (!(y[i] >= 0.0)) support_error("exponential", i, "negative observation");
              total += std::log(x[i]) - x[i] * y[i];
            }
          },
      },
      model);
  return total;
}

}  // namespace n2s
