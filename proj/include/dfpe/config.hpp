// Copyright 2026 The DFPE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dfpe {

enum class FingerprintStrategy { kAnswerPattern, kExternalEmbedding };
enum class FilterOrder { kFilterThenCluster, kClusterThenFilter };

struct RunConfig {
  double quantile_q = 0.05;
  double gamma = 5.0;
  double dbscan_eps = 0.0001;
  int dbscan_min_pts = 2;
  FingerprintStrategy fingerprint_strategy = FingerprintStrategy::kAnswerPattern;
  FilterOrder filter_order = FilterOrder::kFilterThenCluster;
  std::int64_t seed = 0;

  // Throws InputError naming the offending field.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

const char* to_string(FingerprintStrategy strategy);
const char* to_string(FilterOrder order);
FingerprintStrategy parse_fingerprint_strategy(std::string_view text);
FilterOrder parse_filter_order(std::string_view text);

nlohmann::json to_json(const RunConfig& config);

// Overlays the RunConfig fields present in `object` onto `config`. Unknown
// keys are rejected, except "presets" which is handled by PresetRegistry.
void apply_json(RunConfig& config, const nlohmann::json& object);

// Sets one field from its textual form, e.g. ("gamma", "7").
void set_field(RunConfig& config, std::string_view key, std::string_view value);

// Named parameter presets. "optimal" and "balanced" are built in; further
// names (for example an "efficient" mode) come from the "presets" object of a
// config file.
class PresetRegistry {
 public:
  PresetRegistry();

  void add(const std::string& name, nlohmann::json overrides);
  std::vector<std::string> names() const;

  // Applies the preset's fields on top of `base`. Throws InputError listing
  // the valid names for an unknown preset.
  RunConfig apply(const std::string& name, RunConfig base) const;

 private:
  std::map<std::string, nlohmann::json> presets_;
};

// Returns the named built-in preset applied to the defaults.
RunConfig preset(const std::string& name);

struct ConfigFile {
  RunConfig config;
  PresetRegistry presets;
};

ConfigFile load_config_file(const std::filesystem::path& path);

}  // namespace dfpe
