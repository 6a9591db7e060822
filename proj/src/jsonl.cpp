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


#include "jsonl.hpp"

#include <fstream>
#include <sstream>

#include "dfpe/error.hpp"

namespace dfpe::detail {

std::string LineContext::where(const std::string& message) const {
  return source + ":" + std::to_string(line) + ": " + message;
}

void for_each_record(std::istream& in, const std::string& source,
                     const std::function<void(const nlohmann::json&, const LineContext&)>& handle) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const LineContext ctx{source, number};
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(ctx.where(std::string("malformed record: ") + e.what()));
    }
    if (!record.is_object()) throw InputError(ctx.where("record is not an object"));
    handle(record, ctx);
  }
}

std::string require_string(const nlohmann::json& record, const char* key, const LineContext& ctx) {
  auto it = record.find(key);
  if (it == record.end()) throw InputError(ctx.where(std::string("missing field '") + key + "'"));
  if (!it->is_string()) throw InputError(ctx.where(std::string("field '") + key + "' is not a string"));
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& record, const char* key,
                                           const LineContext& ctx) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InputError(ctx.where(std::string("field '") + key + "' is not a string"));
  return it->get<std::string>();
}

std::vector<std::string> require_string_list(const nlohmann::json& record, const char* key,
                                             const LineContext& ctx) {
  auto it = record.find(key);
  if (it == record.end()) throw InputError(ctx.where(std::string("missing field '") + key + "'"));
  if (!it->is_array()) throw InputError(ctx.where(std::string("field '") + key + "' is not a list"));
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& item : *it) {
    if (!item.is_string())
      throw InputError(ctx.where(std::string("field '") + key + "' must hold strings"));
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> require_number_list(const nlohmann::json& record, const char* key,
                                        const LineContext& ctx) {
  auto it = record.find(key);
  if (it == record.end()) throw InputError(ctx.where(std::string("missing field '") + key + "'"));
  if (!it->is_array()) throw InputError(ctx.where(std::string("field '") + key + "' is not a list"));
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& item : *it) {
    if (!item.is_number())
      throw InputError(ctx.where(std::string("field '") + key + "' must hold numbers"));
    out.push_back(item.get<double>());
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw RuntimeError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw RuntimeError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace dfpe::detail
