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


#include "dfpe/collect.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "dfpe/error.hpp"
#include "jsonl.hpp"

namespace dfpe {

namespace {

using Clock = std::chrono::steady_clock;

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string fill(std::string tmpl, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) replace_all(tmpl, "{" + key + "}", value);
  return tmpl;
}

std::string choices_block(const PromptTemplate& tmpl, const QuestionRecord& q) {
  std::string out;
  for (std::size_t i = 0; i < q.choices.size(); ++i) {
    if (i) out += '\n';
    const std::string text = i < q.choice_texts.size() ? q.choice_texts[i] : std::string();
    out += fill(tmpl.choice_format, {{"label", q.choices[i]}, {"text", text}});
  }
  return out;
}

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0 || c == '_'; }

std::string hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xF];
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw RuntimeError("SHA-256 digest failed");
  return hex(digest, len);
}


}  // namespace

void EndpointSpec::validate() const {
  if (model_id.empty()) throw InputError("endpoint: model_id is required");
  if (base_url.empty()) throw InputError("endpoint '" + model_id + "': base_url is required");
  if (!(timeout_seconds > 0.0)) throw InputError("endpoint '" + model_id + "': timeout must be > 0");
  if (max_retries < 0) throw InputError("endpoint '" + model_id + "': max_retries must be >= 0");
  if (max_concurrency < 1)
    throw InputError("endpoint '" + model_id + "': max_concurrency must be >= 1");
  if (initial_backoff_ms < 0 || max_backoff_ms < 0 || min_interval_ms < 0)
    throw InputError("endpoint '" + model_id + "': delays must be >= 0");
}

std::vector<EndpointSpec> parse_endpoints(const std::string& text) {
  std::vector<EndpointSpec> out;
  try {
    auto doc = nlohmann::json::parse(text);
    const auto& list = doc.is_object() ? doc.at("endpoints") : doc;
    if (!list.is_array()) throw InputError("endpoint config must be a list");
    for (const auto& j : list) {
      EndpointSpec e;
      e.model_id = j.at("model_id").get<std::string>();
      e.base_url = j.at("base_url").get<std::string>();
      e.model_name = j.value("model_name", e.model_id);
      e.auth_env = j.value("auth_env", std::string());
      e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
      e.max_retries = j.value("max_retries", e.max_retries);
      e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
      e.template_id = j.value("template_id", e.template_id);
      e.initial_backoff_ms = j.value("initial_backoff_ms", e.initial_backoff_ms);
      e.max_backoff_ms = j.value("max_backoff_ms", e.max_backoff_ms);
      e.min_interval_ms = j.value("min_interval_ms", e.min_interval_ms);
      e.max_tokens = j.value("max_tokens", e.max_tokens);
      e.validate();
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed endpoint config: ") + e.what());
  }
  std::vector<std::string> ids;
  for (const auto& e : out) ids.push_back(e.model_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw InputError("endpoint config lists a model_id twice");
  return out;
}

std::vector<EndpointSpec> load_endpoints(const std::filesystem::path& path) {
  try {
    return parse_endpoints(detail::read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::map<std::string, PromptTemplate> parse_templates(const std::string& text) {
  std::map<std::string, PromptTemplate> out;
  try {
    auto doc = nlohmann::json::parse(text);
    for (const auto& [id, j] : doc.items()) {
      PromptTemplate t;
      t.id = id;
      t.system = j.value("system", std::string());
      t.user = j.at("user").get<std::string>();
      t.question_format = j.value("question_format", t.question_format);
      t.example_format = j.value("example_format", t.example_format);
      t.choice_format = j.value("choice_format", t.choice_format);
      t.shots = j.value("shots", t.shots);
      if (t.shots < 0) throw InputError("template '" + id + "': shots must be >= 0");
      out.emplace(id, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed template file: ") + e.what());
  }
  return out;
}

std::map<std::string, PromptTemplate> load_templates(const std::filesystem::path& path) {
  try {
    return parse_templates(detail::read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

ChatPrompt render_prompt(const PromptTemplate& tmpl, const Dataset& dataset,
                         const QuestionRecord& question) {
  std::string examples;
  int used = 0;
  for (const auto& ex : dataset.subject(question.subject_id).validation) {
    if (used >= tmpl.shots) break;
    if (ex.question_id == question.question_id) continue;
    examples += fill(tmpl.example_format, {{"question", ex.question_text},
                                           {"choices", choices_block(tmpl, ex)},
                                           {"answer", ex.correct_choice}});
    ++used;
  }
  std::string subject = question.subject_id;
  std::replace(subject.begin(), subject.end(), '_', ' ');
  const std::string asked = fill(tmpl.question_format, {{"question", question.question_text},
                                                        {"choices", choices_block(tmpl, question)}});
  // {question} last so that braces inside question text are never expanded.
  std::string user = fill(tmpl.user, {{"subject", subject}, {"examples", examples}});
  replace_all(user, "{question}", asked);
  return {fill(tmpl.system, {{"subject", subject}}), user};
}

std::optional<std::string> extract_choice(const std::string& response,
                                          const QuestionRecord& question) {
  static const std::regex kStated(R"(answer\s*(?:is\s*)?:?\s*\(?([^\s().,:;!?*]+))", std::regex::icase);
  for (std::sregex_iterator it(response.begin(), response.end(), kStated), end; it != end; ++it) {
    const std::string candidate = (*it)[1].str();
    for (const auto& label : question.choices)
      if (label == candidate) return label;
  }

  std::size_t best_pos = std::string::npos;
  const std::string* best = nullptr;
  for (const auto& label : question.choices) {
    if (label.empty()) continue;
    for (std::size_t pos = response.find(label); pos != std::string::npos;
         pos = response.find(label, pos + 1)) {
      const bool left_ok = pos == 0 || !is_word_char(static_cast<unsigned char>(response[pos - 1]));
      const std::size_t end = pos + label.size();
      const bool right_ok =
          end >= response.size() || !is_word_char(static_cast<unsigned char>(response[end]));
      if (!left_ok || !right_ok) continue;
      if (pos < best_pos || (pos == best_pos && label.size() > best->size())) {
        best_pos = pos;
        best = &label;
      }
      break;
    }
  }
  if (best) return *best;

  std::size_t best_len = 0;
  for (std::size_t i = 0; i < question.choice_texts.size(); ++i) {
    const auto& text = question.choice_texts[i];
    if (text.empty() || text.size() <= best_len) continue;
    if (response.find(text) != std::string::npos) {
      best_len = text.size();
      best = &question.choices[i];
    }
  }
  if (best) return *best;
  return std::nullopt;
}

std::string cache_key(const std::string& model_id, const ChatPrompt& prompt) {
  const nlohmann::json j{{"model_id", model_id}, {"system", prompt.system}, {"user", prompt.user}};
  return sha256_hex(j.dump());
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return nlohmann::json::parse(buffer.str()).at("response").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // unreadable entries are refetched
  }
}

void ResponseCache::put(const std::string& key, const std::string& model_id,
                        const std::string& response) const {
  const nlohmann::json j{{"model_id", model_id}, {"response", response}};
  // Unique temp name per thread; write_file_atomic uses a fixed suffix.
  std::ostringstream tmp_name;
  tmp_name << key << ".json." << std::this_thread::get_id() << ".tmp";
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write cache entry " + tmp.string());
    out << j.dump();
  }
  std::filesystem::rename(tmp, dir_ / (key + ".json"));
}

std::string chat_request_body(const EndpointSpec& endpoint, const ChatPrompt& prompt) {
  nlohmann::json messages = nlohmann::json::array();
  if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
  messages.push_back({{"role", "user"}, {"content", prompt.user}});
  nlohmann::json body{{"model", endpoint.model_name}, {"messages", messages}, {"temperature", 0}};
  if (endpoint.max_tokens > 0) body["max_tokens"] = endpoint.max_tokens;
  return body.dump();
}

std::string chat_response_text(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError(std::string("unexpected chat completion response: ") + e.what());
  }
}

bool is_transient_status(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

ChatTransport http_transport() {
  return [](const EndpointSpec& endpoint, const std::string& body,
            const std::string& token) -> HttpResult {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint.base_url, m, kUrl))
      throw InputError("endpoint '" + endpoint.model_id + "': malformed base_url '" +
                       endpoint.base_url + "'");
    std::string path = m[2].matched ? m[2].str() : std::string();
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/chat/completions";

    httplib::Client client(m[1].str());
    const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    if (!token.empty()) client.set_bearer_token_auth(token);
    auto res = client.Post(path, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  };
}

CollectResult collect_predictions(const std::vector<EndpointSpec>& endpoints,
                                  const std::map<std::string, PromptTemplate>& templates,
                                  const Dataset& dataset, const std::filesystem::path& cache_dir,
                                  const ChatTransport& transport) {
  for (const auto& e : endpoints) {
    e.validate();
    if (!templates.count(e.template_id))
      throw InputError("endpoint '" + e.model_id + "': unknown prompt template '" + e.template_id + "'");
  }
  const ResponseCache cache(cache_dir);

  std::vector<const QuestionRecord*> questions;
  for (const auto& [_, subject] : dataset.subjects()) {
    for (const auto& q : subject.validation) questions.push_back(&q);
    for (const auto& q : subject.test) questions.push_back(&q);
  }

  CollectResult result;
  std::mutex mutex;  // guards result.stats and result.warnings
  auto warn = [&](std::string msg) {
    std::lock_guard lock(mutex);
    result.warnings.push_back(std::move(msg));
  };

  for (const auto& endpoint : endpoints) {
    const PromptTemplate& tmpl = templates.at(endpoint.template_id);
    std::string token;
    if (!endpoint.auth_env.empty()) {
      const char* value = std::getenv(endpoint.auth_env.c_str());
      if (value == nullptr)
        throw InputError("endpoint '" + endpoint.model_id + "': environment variable " +
                         endpoint.auth_env + " is not set");
      token = value;
    }

    std::vector<std::optional<PredictionRecord>> slots(questions.size());
    std::atomic<std::size_t> next{0};
    std::mutex pace_mutex;
    Clock::time_point next_start = Clock::now();

    auto pace = [&] {
      if (endpoint.min_interval_ms <= 0) return;
      Clock::time_point start;
      {
        std::lock_guard lock(pace_mutex);
        start = std::max(next_start, Clock::now());
        next_start = start + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double, std::milli>(endpoint.min_interval_ms));
      }
      std::this_thread::sleep_until(start);
    };

    auto fetch = [&](const ChatPrompt& prompt, const QuestionRecord& q) -> std::optional<std::string> {
      const std::string body = chat_request_body(endpoint, prompt);
      for (int attempt = 0;; ++attempt) {
        pace();
        HttpResult res = transport(endpoint, body, token);
        {
          std::lock_guard lock(mutex);
          ++result.stats.network_calls;
        }
        if (res.status >= 200 && res.status < 300) return chat_response_text(res.body);
        const std::string reason =
            res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
        if (!is_transient_status(res.status) || attempt >= endpoint.max_retries) {
          warn("model '" + endpoint.model_id + "', question " + q.subject_id + "/" + q.question_id +
               ": giving up after " + std::to_string(attempt + 1) + " attempt(s): " + reason);
          return std::nullopt;
        }
        {
          std::lock_guard lock(mutex);
          ++result.stats.retries;
        }
        const double delay =
            std::min(endpoint.max_backoff_ms, endpoint.initial_backoff_ms * std::pow(2.0, attempt));
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
      }
    };

    std::exception_ptr failure;
    auto worker = [&] {
      for (std::size_t i = next++; i < questions.size(); i = next++) {
        try {
          const QuestionRecord& q = *questions[i];
          const ChatPrompt prompt = render_prompt(tmpl, dataset, q);
          const std::string key = cache_key(endpoint.model_id, prompt);
          std::optional<std::string> response = cache.get(key);
          if (response) {
            std::lock_guard lock(mutex);
            ++result.stats.cache_hits;
          } else {
            response = fetch(prompt, q);
            if (!response) {
              std::lock_guard lock(mutex);
              ++result.stats.failed;
              continue;
            }
            cache.put(key, endpoint.model_id, *response);
          }
          auto choice = extract_choice(*response, q);
          if (!choice) {
            {
              std::lock_guard lock(mutex);
              ++result.stats.unanswered;
            }
            warn("model '" + endpoint.model_id + "', question " + q.subject_id + "/" +
                 q.question_id + ": no choice found in response; recorded as unanswered");
            continue;
          }
          slots[i] = PredictionRecord{endpoint.model_id, q.subject_id, q.question_id, *choice, *response};
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(endpoint.max_concurrency),
                                           std::max<std::size_t>(questions.size(), 1));
      for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    for (auto& slot : slots)
      if (slot) result.records.push_back(std::move(*slot));
  }

  std::sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.subject_id, a.question_id) <
           std::tie(b.model_id, b.subject_id, b.question_id);
  });
  std::sort(result.warnings.begin(), result.warnings.end());
  return result;
}

}  // namespace dfpe
