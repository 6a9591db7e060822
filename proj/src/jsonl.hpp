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


// Internal helpers for line-delimited JSON input and atomic file output.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dfpe::detail {

struct LineContext {
  const std::string& source;
  std::size_t line;

  // "<source>:<line>: <message>"
  std::string where(const std::string& message) const;
};

// Calls `handle` for every non-blank line parsed as a JSON object. Parse
// failures raise InputError with the line number.
void for_each_record(std::istream& in, const std::string& source,
                     const std::function<void(const nlohmann::json&, const LineContext&)>& handle);

std::string require_string(const nlohmann::json& record, const char* key, const LineContext& ctx);
std::optional<std::string> optional_string(const nlohmann::json& record, const char* key,
                                           const LineContext& ctx);
std::vector<std::string> require_string_list(const nlohmann::json& record, const char* key,
                                             const LineContext& ctx);
std::vector<double> require_number_list(const nlohmann::json& record, const char* key,
                                        const LineContext& ctx);

// Opens `path` for reading; InputError when it cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace dfpe::detail
