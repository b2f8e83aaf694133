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


#ifndef N2S_HARNESS_CONFIG_HPP_
#define N2S_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "n2s/training.hpp"

namespace n2s {

// Everything `train` reads from a config file.
struct TrainSettings {
  TrainConfig train;
  std::uint32_t width = 48;
  std::uint32_t layers = 5;
  // Poisson only: the network is trained on counts y / zeta.
  double zeta = 0.0;
  // Convert colour inputs to Rec.601 luma before training.
  bool gray = false;
};

using KeyValue = std::pair<std::string, std::string>;

// "key=value" with surrounding blanks trimmed.
KeyValue parse_key_value(std::string_view text);

// Plain-text config: one key=value per line, '#' starts a comment.
std::vector<KeyValue> read_key_values(const std::filesystem::path& path);

// Starts from the defaults of the selected family, then applies the file
// entries followed by `overrides`, later entries winning. Keys:
//   family epochs lr lr_decayed lr_switch_epoch sigma_a_max sigma_a_min
//   patch batch patches_per_image seed width layers zeta gray
TrainSettings load_train_settings(const std::optional<std::filesystem::path>& file,
                                  const std::vector<KeyValue>& overrides);

// Effective settings in the file syntax, one key per line in the order above.
std::string format_train_settings(const TrainSettings& settings);

}  // namespace n2s

#endif  // N2S_HARNESS_CONFIG_HPP_
