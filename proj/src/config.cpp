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


#include "dfpe/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "dfpe/error.hpp"
#include "jsonl.hpp"

namespace dfpe {

namespace {

double parse_double(std::string_view key, std::string_view text) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw InputError("config field '" + std::string(key) + "': not a number: '" + s + "'");
  return v;
}

std::int64_t parse_int(std::string_view key, std::string_view text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InputError("config field '" + std::string(key) + "': not an integer: '" +
                     std::string(text) + "'");
  return v;
}

}  // namespace

const char* to_string(FingerprintStrategy strategy) {
  return strategy == FingerprintStrategy::kAnswerPattern ? "answer_pattern" : "external_embedding";
}

const char* to_string(FilterOrder order) {
  return order == FilterOrder::kFilterThenCluster ? "filter_then_cluster" : "cluster_then_filter";
}

FingerprintStrategy parse_fingerprint_strategy(std::string_view text) {
  if (text == "answer_pattern") return FingerprintStrategy::kAnswerPattern;
  if (text == "external_embedding") return FingerprintStrategy::kExternalEmbedding;
  throw InputError("fingerprint_strategy must be answer_pattern or external_embedding, got '" +
                   std::string(text) + "'");
}

FilterOrder parse_filter_order(std::string_view text) {
  if (text == "filter_then_cluster") return FilterOrder::kFilterThenCluster;
  if (text == "cluster_then_filter") return FilterOrder::kClusterThenFilter;
  throw InputError("filter_order must be filter_then_cluster or cluster_then_filter, got '" +
                   std::string(text) + "'");
}

void RunConfig::validate() const {
  if (!(quantile_q >= 0.0 && quantile_q <= 1.0))
    throw InputError("quantile_q must lie in [0, 1]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be >= 0");
  if (!(dbscan_eps > 0.0) || !std::isfinite(dbscan_eps)) throw InputError("dbscan_eps must be > 0");
  if (dbscan_min_pts < 1) throw InputError("dbscan_min_pts must be >= 1");
}

nlohmann::json to_json(const RunConfig& config) {
  return nlohmann::json{
      {"quantile_q", config.quantile_q},
      {"gamma", config.gamma},
      {"dbscan_eps", config.dbscan_eps},
      {"dbscan_min_pts", config.dbscan_min_pts},
      {"fingerprint_strategy", to_string(config.fingerprint_strategy)},
      {"filter_order", to_string(config.filter_order)},
      {"seed", config.seed},
  };
}

void apply_json(RunConfig& config, const nlohmann::json& object) {
  if (!object.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (key == "presets") continue;
    auto need_number = [&] {
      if (!value.is_number()) throw InputError("config field '" + key + "' must be a number");
    };
    auto need_integer = [&] {
      if (!value.is_number_integer())
        throw InputError("config field '" + key + "' must be an integer");
    };
    auto need_string = [&] {
      if (!value.is_string()) throw InputError("config field '" + key + "' must be a string");
    };
    if (key == "quantile_q") {
      need_number();
      config.quantile_q = value.get<double>();
    } else if (key == "gamma") {
      need_number();
      config.gamma = value.get<double>();
    } else if (key == "dbscan_eps") {
      need_number();
      config.dbscan_eps = value.get<double>();
    } else if (key == "dbscan_min_pts") {
      need_integer();
      config.dbscan_min_pts = value.get<int>();
    } else if (key == "fingerprint_strategy") {
      need_string();
      config.fingerprint_strategy = parse_fingerprint_strategy(value.get<std::string>());
    } else if (key == "filter_order") {
      need_string();
      config.filter_order = parse_filter_order(value.get<std::string>());
    } else if (key == "seed") {
      need_integer();
      config.seed = value.get<std::int64_t>();
    } else {
      throw InputError("unknown config field '" + key + "'");
    }
  }
}

void set_field(RunConfig& config, std::string_view key, std::string_view value) {
  if (key == "quantile_q") {
    config.quantile_q = parse_double(key, value);
  } else if (key == "gamma") {
    config.gamma = parse_double(key, value);
  } else if (key == "dbscan_eps") {
    config.dbscan_eps = parse_double(key, value);
  } else if (key == "dbscan_min_pts") {
    auto v = parse_int(key, value);
    if (v < 1 || v > 1'000'000) throw InputError("dbscan_min_pts out of range");
    config.dbscan_min_pts = static_cast<int>(v);
  } else if (key == "fingerprint_strategy") {
    config.fingerprint_strategy = parse_fingerprint_strategy(value);
  } else if (key == "filter_order") {
    config.filter_order = parse_filter_order(value);
  } else if (key == "seed") {
    config.seed = parse_int(key, value);
  } else {
    throw InputError("unknown config field '" + std::string(key) + "'");
  }
}

PresetRegistry::PresetRegistry() {
  presets_["optimal"] = {{"quantile_q", 0.05}, {"gamma", 5.0}, {"dbscan_eps", 0.0001}};
  presets_["balanced"] = {{"quantile_q", 0.5}, {"gamma", 7.0}, {"dbscan_eps", 0.001}};
}

void PresetRegistry::add(const std::string& name, nlohmann::json overrides) {
  RunConfig probe;
  try {
    apply_json(probe, overrides);
    probe.validate();
  } catch (const InputError& e) {
    throw InputError("preset '" + name + "': " + e.what());
  }
  presets_[name] = std::move(overrides);
}

std::vector<std::string> PresetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : presets_) out.push_back(name);
  return out;
}

RunConfig PresetRegistry::apply(const std::string& name, RunConfig base) const {
  auto it = presets_.find(name);
  if (it == presets_.end()) {
    std::ostringstream msg;
    msg << "unknown preset '" << name << "'; valid presets:";
    for (const auto& n : names()) msg << ' ' << n;
    if (name == "efficient") msg << " (define 'efficient' under \"presets\" in the config file)";
    throw InputError(msg.str());
  }
  apply_json(base, it->second);
  base.validate();
  return base;
}

RunConfig preset(const std::string& name) { return PresetRegistry().apply(name, RunConfig{}); }

ConfigFile load_config_file(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json object;
  try {
    object = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": malformed config: " + e.what());
  }
  ConfigFile file;
  try {
    apply_json(file.config, object);
    if (auto it = object.find("presets"); it != object.end()) {
      if (!it->is_object()) throw InputError("\"presets\" must be an object");
      for (const auto& [name, overrides] : it->items()) file.presets.add(name, overrides);
    }
    file.config.validate();
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return file;
}

}  // namespace dfpe
