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


#include "n2s/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "n2s/errors.hpp"

namespace n2s {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const KeyValue& kv) {
  T value{};
  const char* end = kv.second.data() + kv.second.size();
  const auto [ptr, ec] = std::from_chars(kv.second.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("config: bad value for " + kv.first + ": '" + kv.second + "'");
  }
  return value;
}

bool parse_bool(const KeyValue& kv) {
  if (kv.second == "1" || kv.second == "true") return true;
  if (kv.second == "0" || kv.second == "false") return false;
  throw InvalidArgument("config: bad value for " + kv.first + ": '" + kv.second + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void apply(TrainSettings& s, const KeyValue& kv) {
  TrainConfig& t = s.train;
  const std::string& k = kv.first;
  if (k == "family") {
    if (parse_family(kv.second) != t.family) throw InvalidArgument("config: family set twice");
  } else if (k == "epochs") {
    t.epochs = parse_number<int>(kv);
  } else if (k == "lr") {
    t.lr = parse_number<double>(kv);
  } else if (k == "lr_decayed") {
    t.lr_decayed = parse_number<double>(kv);
  } else if (k == "lr_switch_epoch") {
    t.lr_switch_epoch = parse_number<int>(kv);
  } else if (k == "sigma_a_max") {
    t.sigma_a_max = parse_number<double>(kv);
  } else if (k == "sigma_a_min") {
    t.sigma_a_min = parse_number<double>(kv);
  } else if (k == "patch") {
    t.patch = parse_number<std::size_t>(kv);
  } else if (k == "batch") {
    t.batch = parse_number<std::size_t>(kv);
  } else if (k == "patches_per_image") {
    t.patches_per_image = parse_number<std::size_t>(kv);
  } else if (k == "seed") {
    t.seed = parse_number<std::uint64_t>(kv);
  } else if (k == "width") {
    s.width = parse_number<std::uint32_t>(kv);
  } else if (k == "layers") {
    s.layers = parse_number<std::uint32_t>(kv);
  } else if (k == "zeta") {
    s.zeta = parse_number<double>(kv);
  } else if (k == "gray") {
    s.gray = parse_bool(kv);
  } else {
    throw InvalidArgument("config: unknown key '" + k + "'");
  }
}

}  // namespace

KeyValue parse_key_value(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw InvalidArgument("expected key=value, got '" + std::string(text) + "'");
  }
  KeyValue kv{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
  if (kv.first.empty()) throw InvalidArgument("empty key in '" + std::string(text) + "'");
  return kv;
}

std::vector<KeyValue> read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config: " + path.string());
  std::vector<KeyValue> entries;
  std::string line;
  while (std::getline(is, line)) {
    std::string_view view = line;
    view = trim(view.substr(0, view.find('#')));
    if (!view.empty()) entries.push_back(parse_key_value(view));
  }
  return entries;
}

TrainSettings load_train_settings(const std::optional<std::filesystem::path>& file,
                                  const std::vector<KeyValue>& overrides) {
  std::vector<KeyValue> entries;
  if (file) entries = read_key_values(*file);
  entries.insert(entries.end(), overrides.begin(), overrides.end());

  NoiseFamily family = NoiseFamily::kGaussian;
  for (const KeyValue& kv : entries) {
    if (kv.first == "family") family = parse_family(kv.second);
  }
  TrainSettings s;
  s.train = TrainConfig::defaults_for(family);
  for (const KeyValue& kv : entries) {
    if (kv.first != "family") apply(s, kv);
  }
  s.train.validate();
  if (s.width < 1 || s.layers < 1) throw InvalidArgument("config: width and layers must be >= 1");
  if (family == NoiseFamily::kPoisson && !(s.zeta > 0.0)) {
    throw InvalidArgument("config: poisson training needs zeta > 0");
  }
  if (family != NoiseFamily::kPoisson && s.zeta != 0.0) {
    throw InvalidArgument("config: zeta applies to poisson only");
  }
  return s;
}

std::string format_train_settings(const TrainSettings& s) {
  const TrainConfig& t = s.train;
  std::ostringstream os;
  os << "family=" << family_name(t.family) << '\n'
     << "epochs=" << t.epochs << '\n'
     << "lr=" << format_double(t.lr) << '\n'
     << "lr_decayed=" << format_double(t.lr_decayed) << '\n'
     << "lr_switch_epoch=" << t.lr_switch_epoch << '\n'
     << "sigma_a_max=" << format_double(t.sigma_a_max) << '\n'
     << "sigma_a_min=" << format_double(t.sigma_a_min) << '\n'
     << "patch=" << t.patch << '\n'
     << "batch=" << t.batch << '\n'
     << "patches_per_image=" << t.patches_per_image << '\n'
     << "seed=" << t.seed << '\n'
     << "width=" << s.width << '\n'
     << "layers=" << s.layers << '\n'
     << "zeta=" << format_double(s.zeta) << '\n'
     << "gray=" << (s.gray ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace n2s
