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


#include "n2s/harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "n2s/blind.hpp"
#include "n2s/diagnostics.hpp"
#include "n2s/errors.hpp"
#include "n2s/harness/image_io.hpp"
#include "n2s/harness/manifest.hpp"
#include "n2s/harness/parallel.hpp"
#include "n2s/net.hpp"
#include "n2s/tensor_io.hpp"
#include "n2s/tweedie.hpp"

namespace n2s {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Shortest text that reads back to the same double.
std::string exact(double v) { return fmt("%.17g", v); }

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory: " + dir.string());
}

std::vector<fs::path> require_images(const fs::path& input) {
  auto files = list_images(input);
  if (files.empty()) throw DataError("no images in " + input.string());
  return files;
}

// Output name for an image with `channels` channels.
fs::path netpbm_name(const fs::path& source, std::size_t channels) {
  return source.stem().string() + (channels == 1 ? ".pgm" : ".ppm");
}

Tensor clamp01(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::clamp(t[i], 0.0, 1.0);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw DataError("write failed: " + path.string());
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_channels(const Image& img, const ResidualNet& net, const fs::path& file) {
  if (img.pixels.extent(0) != net.spec().in_channels()) {
    throw ShapeError(file.filename().string() + ": " + std::to_string(img.pixels.extent(0)) +
                     " channels but the model expects " +
                     std::to_string(net.spec().in_channels()));
  }
}

double parse_positive(std::string_view key, std::string_view value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(std::string(value), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !(v >= 0.0)) {
    throw InvalidArgument("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return v;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const UnsupportedModel*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

void cmd_synthesize(const SynthesizeOptions& opts) {
  const NoiseModel model = parse_noise_model(opts.noise);
  const auto files = require_images(opts.input);
  ensure_directory(opts.out);

  std::vector<fs::path> written(files.size());
  std::vector<fs::path> raw(files.size());
  const Rng base(opts.seed);
  parallel_for(files.size(), [&](std::size_t i) {
    Image img = read_image(files[i]);
    if (opts.gray && img.pixels.extent(0) == 3) img.pixels = to_gray(img.pixels);
    Rng rng = base.child(i);
    const Tensor y = corrupt(model, img.pixels, rng);
    written[i] = opts.out / netpbm_name(files[i], y.extent(0));
    write_netpbm(written[i], y, img.maxval);
    if (opts.raw) {
      raw[i] = opts.out / (files[i].stem().string() + ".n2st");
      write_tensor(raw[i], y);
    }
  });

  RunManifest manifest("synthesize");
  manifest.set_seed(opts.seed);
  manifest.set_config({{"noise", describe(model)},
                       {"gray", opts.gray},
                       {"raw", opts.raw},
                       {"stream", "Rng(seed).child(index in sorted file order)"}});
  for (std::size_t i = 0; i < files.size(); ++i) {
    manifest.add_input(files[i]);
    manifest.add_output(written[i]);
    if (opts.raw) manifest.add_output(raw[i]);
    manifest.add_metric({{"file", files[i].filename().string()},
                         {"output", written[i].filename().string()},
                         {"child", i}});
  }
  manifest.write(opts.out / "manifest.json");
}

LossReport cmd_train(const TrainOptions& opts, std::ostream* progress) {
  const TrainSettings settings = load_train_settings(opts.config, opts.overrides);
  const TrainConfig& cfg = settings.train;
  const auto files = require_images(opts.data);

  std::vector<Tensor> corpus;
  corpus.reserve(files.size());
  for (const auto& file : files) {
    Image img = read_image(file);
    if (settings.gray && img.pixels.extent(0) == 3) img.pixels = to_gray(img.pixels);
    if (!corpus.empty() && img.pixels.extent(0) != corpus.front().extent(0)) {
      throw ShapeError("mixed channel counts in training data: " + file.string());
    }
    if (cfg.family == NoiseFamily::kPoisson) img.pixels = (1.0 / settings.zeta) * img.pixels;
    corpus.push_back(std::move(img.pixels));
  }

  const auto channels = static_cast<std::uint32_t>(corpus.front().extent(0));
  ResidualNet net(reference_architecture(channels, settings.width, settings.layers));
  Rng init(cfg.seed, 0);
  net.initialize(init);

  const auto start = Clock::now();
  const LossReport report = train(net, corpus, cfg, [&](const EpochReport& e, const ResidualNet&) {
    if (progress) {
      *progress << "epoch " << e.epoch << '/' << cfg.epochs << "  sigma_a " << fmt("%.5f", e.sigma_a)
                << "  lr " << fmt("%.1e", e.lr) << "  loss " << fmt("%.6f", e.mean_loss) << "  ("
                << fmt("%.1f", e.seconds) << " s)\n";
      progress->flush();
    }
  });
  const double total_seconds = seconds_since(start);

  if (opts.out.has_parent_path()) ensure_directory(opts.out.parent_path());
  save_params(opts.out, net);
  const fs::path report_dir = opts.out.string() + ".report";
  ensure_directory(report_dir);

  const std::string config_text = format_train_settings(settings);
  write_text(report_dir / "config.txt", config_text);
  std::ostringstream loss;
  loss << "epoch,sigma_a,lr,mean_loss\n";
  for (const auto& e : report.epochs) {
    loss << e.epoch << ',' << exact(e.sigma_a) << ',' << exact(e.lr) << ',' << exact(e.mean_loss)
         << '\n';
  }
  write_text(report_dir / "loss.csv", loss.str());

  RunManifest manifest("train");
  manifest.set_seed(cfg.seed);
  nlohmann::json config = nlohmann::json::object();
  std::istringstream lines(config_text);
  for (std::string line; std::getline(lines, line);) {
    const KeyValue kv = parse_key_value(line);
    config[kv.first] = kv.second;
  }
  manifest.set_config(config);
  manifest.set("architecture", net.spec().to_string());
  manifest.set("parameter_count", parameter_count(net.spec()));
  manifest.set("train_seconds", total_seconds);
  for (const auto& file : files) manifest.add_input(file);
  if (opts.config) manifest.add_input(*opts.config);
  manifest.add_output(opts.out);
  manifest.add_output(report_dir / "config.txt");
  manifest.add_output(report_dir / "loss.csv");
  for (const auto& e : report.epochs) {
    manifest.add_metric({{"epoch", e.epoch},
                         {"sigma_a", e.sigma_a},
                         {"lr", e.lr},
                         {"mean_loss", e.mean_loss},
                         {"seconds", e.seconds}});
  }
  manifest.write(report_dir / "manifest.json");
  return report;
}

DenoiseSpec parse_denoise_spec(std::string_view text) {
  constexpr std::string_view kMixed = "mixed:";
  if (text.substr(0, kMixed.size()) != kMixed) return {parse_noise_model(text)};
  DenoiseSpec spec;
  spec.mixed = true;
  bool have_sigma = false;
  bool have_zeta = false;
  std::string_view rest = text.substr(kMixed.size());
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const KeyValue kv = parse_key_value(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (kv.first == "sigma") {
      spec.mixed_sigma = parse_positive(kv.first, kv.second) / 255.0;
      have_sigma = true;
    } else if (kv.first == "zeta") {
      spec.mixed_zeta = parse_positive(kv.first, kv.second);
      have_zeta = true;
    } else {
      throw InvalidArgument("mixed noise: unknown key '" + kv.first + "'");
    }
  }
  if (!have_sigma || !have_zeta || !(spec.mixed_zeta > 0.0)) {
    throw InvalidArgument("mixed noise needs sigma=..,zeta=.. with zeta > 0");
  }
  return spec;
}

DenoiseSummary cmd_denoise(const DenoiseOptions& opts) {
  const DenoiseSpec spec = parse_denoise_spec(opts.noise);
  const ResidualNet net = load_params(opts.model);
  const auto files = require_images(opts.input);
  ensure_directory(opts.out);

  auto score = [&net](const Tensor& t) { return score_of(net, t); };
  auto restore = [&](const Tensor& y) -> Tensor {
    if (spec.mixed) return denoise_mixed_pg(y, score, spec.mixed_sigma, spec.mixed_zeta);
    if (const auto* g = std::get_if<Gaussian>(&spec.model)) {
      return denoise_gaussian(y, score(y), g->sigma);
    }
    if (const auto* p = std::get_if<PoissonGain>(&spec.model)) {
      return denoise_poisson(y, CountScore{score((1.0 / p->zeta) * y)}, p->zeta);
    }
    if (const auto* m = std::get_if<Gamma>(&spec.model)) {
      return denoise_gamma(y, score(y), m->alpha, m->beta);
    }
    throw InvalidArgument("denoise: no image pipeline for " + describe(spec.model));
  };

  struct Outcome {
    fs::path output;
    double seconds = 0.0;
    std::string status = "ok";
  };
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    const auto start = Clock::now();
    const Image img = read_image(files[i]);
    check_channels(img, net, files[i]);
    try {
      const Tensor xhat = clamp01(restore(img.pixels));
      outcomes[i].output = opts.out / netpbm_name(files[i], xhat.extent(0));
      write_netpbm(outcomes[i].output, xhat, img.maxval);
    } catch (const SingularityError& e) {
      outcomes[i].status = "singular";
      warn(files[i].filename().string() + " skipped: " + e.what());
    }
    outcomes[i].seconds = seconds_since(start);
  });

  DenoiseSummary summary;
  RunManifest manifest("denoise");
  manifest.set_config({{"noise", std::string(opts.noise)},
                       {"model", opts.model.string()},
                       {"architecture", net.spec().to_string()}});
  manifest.add_input(opts.model);
  for (std::size_t i = 0; i < files.size(); ++i) {
    manifest.add_input(files[i]);
    if (outcomes[i].status == "ok") {
      manifest.add_output(outcomes[i].output);
      ++summary.written;
    } else {
      summary.skipped.push_back(files[i].filename().string());
    }
    manifest.add_metric({{"file", files[i].filename().string()},
                         {"status", outcomes[i].status},
                         {"seconds", outcomes[i].seconds}});
  }
  manifest.write(opts.out / "manifest.json");
  return summary;
}

std::vector<BlindResult> cmd_blind_denoise(const BlindDenoiseOptions& opts) {
  const NoiseFamily family = parse_family(opts.family);
  std::string grid_text = opts.grid;
  if (grid_text.empty()) {
    grid_text = family == NoiseFamily::kGaussian  ? "5:55:0.5"
                : family == NoiseFamily::kPoisson ? "0.001:0.1:0.001"
                                                  : "40:120:0.5";
  }
  GridSpec grid = parse_grid(grid_text);
  // Gaussian grids are given on the 8-bit scale.
  const double unit = family == NoiseFamily::kGaussian ? 255.0 : 1.0;
  grid.lower /= unit;
  grid.upper /= unit;
  grid.step /= unit;

  const ResidualNet net = load_params(opts.model);
  const auto files = require_images(opts.input);
  ensure_directory(opts.out);
  const ScoreFn provider = [&net](const Tensor& t) { return score_of(net, t); };
  const MetricSchedule metric = default_metric_schedule(family);

  std::vector<BlindResult> results(files.size());
  std::vector<fs::path> images(files.size());
  std::vector<fs::path> curves(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    const Image img = read_image(files[i]);
    check_channels(img, net, files[i]);
    const BlindEstimate est = estimate_parameter(family, img.pixels, provider, metric, grid);
    images[i] = opts.out / netpbm_name(files[i], img.pixels.extent(0));
    write_netpbm(images[i], clamp01(est.xhat), img.maxval);
    std::ostringstream csv;
    csv << "parameter,Q\n";
    for (const auto& p : est.curve) {
      csv << fmt("%.10g", p.parameter * unit) << ',' << (p.singular ? "nan" : exact(p.quality))
          << '\n';
    }
    curves[i] = opts.out / (files[i].stem().string() + ".curve.csv");
    write_text(curves[i], csv.str());
    results[i] = {files[i].filename().string(), est.parameter * unit, est.quality};
  });

  std::ostringstream estimates;
  estimates << "file,parameter,Q\n";
  RunManifest manifest("blind-denoise");
  manifest.set_config({{"family", family_name(family)},
                       {"grid", grid_text},
                       {"model", opts.model.string()},
                       {"parameter_unit", family == NoiseFamily::kGaussian ? "sigma*255" : "raw"}});
  manifest.add_input(opts.model);
  for (std::size_t i = 0; i < files.size(); ++i) {
    manifest.add_input(files[i]);
    manifest.add_output(images[i]);
    manifest.add_output(curves[i]);
    manifest.add_metric(
        {{"file", results[i].file}, {"parameter", results[i].parameter}, {"Q", results[i].quality}});
    estimates << results[i].file << ',' << fmt("%.10g", results[i].parameter) << ','
              << exact(results[i].quality) << '\n';
  }
  write_text(opts.out / "estimates.csv", estimates.str());
  manifest.add_output(opts.out / "estimates.csv");
  manifest.write(opts.out / "manifest.json");
  return results;
}

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

EvaluateResult cmd_evaluate(const EvaluateOptions& opts, std::ostream& csv) {
  const auto refs = require_images(opts.ref);
  std::map<std::string, fs::path> preds;
  for (const auto& p : require_images(opts.pred)) {
    if (!preds.emplace(p.stem().string(), p).second) {
      throw DataError("duplicate prediction stem: " + p.stem().string());
    }
  }
  if (preds.size() != refs.size()) {
    throw DataError("prediction and reference sets differ in size");
  }

  EvaluateResult result;
  for (const auto& ref : refs) {
    const auto it = preds.find(ref.stem().string());
    if (it == preds.end()) throw DataError("no prediction for " + ref.filename().string());
    const Tensor r = read_image(ref).pixels;
    const Tensor p = read_image(it->second).pixels;
    if (!r.same_shape(p)) {
      throw ShapeError(ref.filename().string() + ": shape " + shape_string(p.shape()) + " vs " +
                       shape_string(r.shape()));
    }
    double se = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) se += (p[i] - r[i]) * (p[i] - r[i]);
    result.rows.push_back({ref.stem().string(), se / static_cast<double>(r.size()), psnr(p, r)});
  }
  for (const auto& row : result.rows) {
    result.mean_mse += row.mse;
    result.mean_psnr += row.psnr;
  }
  result.mean_mse /= static_cast<double>(result.rows.size());
  result.mean_psnr /= static_cast<double>(result.rows.size());

  auto show = [](double v) { return std::isinf(v) ? std::string("inf") : fmt("%.6f", v); };
  csv << "file,mse,psnr\n";
  for (const auto& row : result.rows) {
    csv << row.file << ',' << fmt("%.10g", row.mse) << ',' << show(row.psnr) << '\n';
  }
  csv << "mean," << fmt("%.10g", result.mean_mse) << ',' << show(result.mean_psnr) << '\n';
  return result;
}

bool cmd_oracle_check(std::string_view suite, std::ostream& os, const OracleOptions& opts) {
  const auto checks = run_oracle_suite(suite, opts);
  write_oracle_csv(os, checks);
  return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
}

}  // namespace n2s
