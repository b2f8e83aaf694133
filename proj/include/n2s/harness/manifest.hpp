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


#ifndef N2S_HARNESS_MANIFEST_HPP_
#define N2S_HARNESS_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace n2s {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// JSON record of one command run: command, seed, effective config, hashed
// inputs and outputs, and a metrics table.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_seed(std::uint64_t seed);
  void set_config(nlohmann::json config);
  void set(const std::string& key, nlohmann::json value);
  void add_input(const std::filesystem::path& path);
  // Hashed when the manifest is written.
  void add_output(const std::filesystem::path& path);
  void add_metric(nlohmann::json row);

  // Fails with DataError if a listed output is missing.
  nlohmann::json finalize() const;
  void write(const std::filesystem::path& path) const;

 private:
  nlohmann::json doc_;
  std::vector<std::filesystem::path> outputs_;
};

}  // namespace n2s

#endif  // N2S_HARNESS_MANIFEST_HPP_
