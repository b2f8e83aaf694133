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


// n2s: self-supervised score-based denoising from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "n2s/errors.hpp"
#include "n2s/harness/commands.hpp"

namespace {

const char* const kConfigKeys[] = {"family",      "epochs",      "lr",    "lr_decayed",
                                   "lr_switch_epoch", "sigma_a_max", "sigma_a_min", "patch",
                                   "batch",       "patches_per_image", "seed", "width",
                                   "layers",      "zeta",        "gray"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised denoising: train a score network on noisy images only, "
               "then denoise with Tweedie's formula."};
  app.require_subcommand(1);

  n2s::SynthesizeOptions syn;
  auto* synthesize = app.add_subcommand("synthesize", "Corrupt clean images with a noise model");
  synthesize->add_option("--input", syn.input, "Image file or directory")->required();
  synthesize->add_option("--noise", syn.noise, "gaussian:sigma=25 | poisson:zeta=0.01 | gamma:k=100")
      ->required();
  synthesize->add_option("--seed", syn.seed, "Random seed");
  synthesize->add_option("--out", syn.out, "Output directory")->required();
  synthesize->add_flag("--raw", syn.raw, "Also write unquantized .n2st tensors");
  synthesize->add_flag("--gray", syn.gray, "Convert colour inputs to luma first");

  n2s::TrainOptions tr;
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> key_flags;
  auto* train = app.add_subcommand("train", "Train a score network on noisy images");
  train->add_option("--data", tr.data, "Directory of noisy images")->required();
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--out", tr.out, "Parameter file to write")->required();
  train->add_option("--set", sets, "Config override key=value (repeatable)");
  for (const char* key : kConfigKeys) {
    train->add_option(std::string("--") + key, key_flags[key], std::string("Override ") + key);
  }

  n2s::DenoiseOptions dn;
  auto* denoise = app.add_subcommand("denoise", "Denoise images with a trained network");
  denoise->add_option("--input", dn.input, "Image file or directory")->required();
  denoise->add_option("--model", dn.model, "Parameter file")->required();
  denoise->add_option("--noise", dn.noise, "Noise spec, or mixed:sigma=S,zeta=Z")->required();
  denoise->add_option("--out", dn.out, "Output directory")->required();

  n2s::BlindDenoiseOptions bd;
  auto* blind = app.add_subcommand("blind-denoise", "Estimate the noise level, then denoise");
  blind->add_option("--input", bd.input, "Image file or directory")->required();
  blind->add_option("--model", bd.model, "Parameter file")->required();
  blind->add_option("--family", bd.family, "gaussian | poisson | gamma")->required();
  blind->add_option("--grid", bd.grid, "lo:hi:step (gaussian sigma on the 0-255 scale)");
  blind->add_option("--out", bd.out, "Output directory")->required();

  n2s::EvaluateOptions ev;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR of predictions against references");
  evaluate->add_option("--pred", ev.pred, "Predicted image file or directory")->required();
  evaluate->add_option("--ref", ev.ref, "Reference image file or directory")->required();
  evaluate->add_option("--out", eval_out, "Write the CSV here instead of stdout");

  std::string suite = "all";
  std::string oracle_out;
  n2s::OracleOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle-check", "Run the analytic oracle suites");
  oracle->add_option("--suite", suite, "all | pointmass | conjugate | sure-ism | gradient");
  oracle->add_option("--out", oracle_out, "Write the CSV here instead of stdout");
  oracle->add_option("--poisson-offset", oracle_opts.poisson_offset)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synthesize) {
      n2s::cmd_synthesize(syn);
    } else if (*train) {
      if (!config_path.empty()) tr.config = config_path;
      for (const auto& s : sets) tr.overrides.push_back(n2s::parse_key_value(s));
      for (const char* key : kConfigKeys) {
        if (train->count(std::string("--") + key) > 0) tr.overrides.emplace_back(key, key_flags[key]);
      }
      n2s::cmd_train(tr, &std::cerr);
    } else if (*denoise) {
      const auto summary = n2s::cmd_denoise(dn);
      std::cerr << summary.written << " image(s) written";
      if (!summary.skipped.empty()) std::cerr << ", " << summary.skipped.size() << " skipped";
      std::cerr << '\n';
    } else if (*blind) {
      for (const auto& r : n2s::cmd_blind_denoise(bd)) {
        std::cout << r.file << ": " << bd.family << " parameter " << r.parameter << '\n';
      }
    } else if (*evaluate) {
      if (eval_out.empty()) {
        n2s::cmd_evaluate(ev, std::cout);
      } else {
        std::ofstream os(eval_out);
        if (!os) throw n2s::DataError("cannot open for writing: " + eval_out);
        n2s::cmd_evaluate(ev, os);
      }
    } else if (*oracle) {
      bool ok = false;
      if (oracle_out.empty()) {
        ok = n2s::cmd_oracle_check(suite, std::cout, oracle_opts);
      } else {
        std::ofstream os(oracle_out);
        if (!os) throw n2s::DataError("cannot open for writing: " + oracle_out);
        ok = n2s::cmd_oracle_check(suite, os, oracle_opts);
      }
      if (!ok) {
        std::cerr << "oracle-check: failures\n";
        return 4;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return n2s::exit_code_for(e);
  }
  return 0;
}
