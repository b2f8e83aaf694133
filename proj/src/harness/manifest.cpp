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


#include "n2s/harness/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "n2s/errors.hpp"

namespace n2s {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for hashing: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest init failed");
  }
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char byte[3];
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

RunManifest::RunManifest(std::string command) {
  doc_["command"] = std::move(command);
  doc_["inputs"] = nlohmann::json::array();
  doc_["outputs"] = nlohmann::json::array();
  doc_["metrics"] = nlohmann::json::array();
}

void RunManifest::set_seed(std::uint64_t seed) { doc_["seed"] = seed; }

void RunManifest::set_config(nlohmann::json config) { doc_["config"] = std::move(config); }

void RunManifest::set(const std::string& key, nlohmann::json value) {
  doc_[key] = std::move(value);
}

void RunManifest::add_input(const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::add_metric(nlohmann::json row) { doc_["metrics"].push_back(std::move(row)); }

nlohmann::json RunManifest::finalize() const {
  nlohmann::json doc = doc_;
  for (const auto& path : outputs_) {
    if (!std::filesystem::is_regular_file(path)) {
      throw DataError("manifest: missing output " + path.string());
    }
    doc["outputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  return doc;
}

void RunManifest::write(const std::filesystem::path& path) const {
  const nlohmann::json doc = finalize();
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << doc.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace n2s
