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


#ifndef N2S_HARNESS_COMMANDS_HPP_
#define N2S_HARNESS_COMMANDS_HPP_

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "n2s/harness/config.hpp"
#include "n2s/harness/oracle_suite.hpp"
#include "n2s/noise_models.hpp"
#include "n2s/tensor.hpp"
#include "n2s/training.hpp"

namespace n2s {

// Exit status for an exception escaping a command: 2 usage, 3 data,
// 4 numerical. Anything else is 1.
int exit_code_for(const std::exception& e);

struct SynthesizeOptions {
  std::filesystem::path input;
  std::string noise;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  // Also write each unquantized noisy image as <stem>.n2st.
  bool raw = false;
  bool gray = false;
};

// Corrupts every image in `input` (sorted by name); image i uses the
// generator Rng(seed).child(i). Writes quantized copies under the input's
// file name and maxval, plus manifest.json.
void cmd_synthesize(const SynthesizeOptions& opts);

struct TrainOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> config;
  std::vector<KeyValue> overrides;
  std::filesystem::path out;
};

// Trains on every image in `data` and writes the parameter file to `out`
// plus <out>.report/ with config.txt, loss.csv and manifest.json.
LossReport cmd_train(const TrainOptions& opts, std::ostream* progress = nullptr);

// "mixed:sigma=S,zeta=Z" with S on the 8-bit scale, or any noise model spec.
struct DenoiseSpec {
  NoiseModel model;
  bool mixed = false;
  double mixed_sigma = 0.0;
  double mixed_zeta = 0.0;
};
DenoiseSpec parse_denoise_spec(std::string_view text);

struct DenoiseOptions {
  std::filesystem::path input;
  std::filesystem::path model;
  std::string noise;
  std::filesystem::path out;
};

struct DenoiseSummary {
  std::size_t written = 0;
  std::vector<std::string> skipped;
};

// Score network -> Tweedie estimator -> clamp to [0, 1] -> <out>/<stem>.pgm
// or .ppm. Gamma images with a singular denominator are skipped and listed.
DenoiseSummary cmd_denoise(const DenoiseOptions& opts);

struct BlindDenoiseOptions {
  std::filesystem::path input;
  std::filesystem::path model;
  std::string family;
  // "lo:hi:step"; Gaussian sigma on the 8-bit scale. Empty selects
  // 5:55:0.5, 0.001:0.1:0.001 or 40:120:0.5.
  std::string grid;
  std::filesystem::path out;
};

struct BlindResult {
  std::string file;
  double parameter = 0.0;
  double quality = 0.0;
};

// Per image: grid search, restored image, <stem>.curve.csv (parameter,Q).
// Also writes estimates.csv and manifest.json.
std::vector<BlindResult> cmd_blind_denoise(const BlindDenoiseOptions& opts);

struct EvaluateOptions {
  std::filesystem::path pred;
  std::filesystem::path ref;
};

struct PsnrRow {
  std::string file;
  double mse = 0.0;
  double psnr = 0.0;
};

struct EvaluateResult {
  std::vector<PsnrRow> rows;
  double mean_mse = 0.0;
  double mean_psnr = 0.0;
};

// 10 log10(1 / MSE) on the [0, 1] scale, +inf for identical inputs.
double psnr(const Tensor& a, const Tensor& b);

// Pairs files by stem. Emits "file,mse,psnr" rows and a final "mean" row.
EvaluateResult cmd_evaluate(const EvaluateOptions& opts, std::ostream& csv);

// Prints the CSV report to `os`; true if every check passed.
bool cmd_oracle_check(std::string_view suite, std::ostream& os,
                      const OracleOptions& opts = {});

}  // namespace n2s

#endif  // N2S_HARNESS_COMMANDS_HPP_
