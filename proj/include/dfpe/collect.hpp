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


// Prediction collector for chat-completions style HTTP endpoints.
//
// Every (model, question) prompt is rendered from a template file, looked up
// in an on-disk response cache keyed by SHA-256 of (model_id, prompt), and
// only sent over the network on a cache miss. Transient failures (connection
// errors, 408, 429, 5xx) are retried with exponential backoff. The answer
// letter is extracted from the response text; unanswerable responses are
// dropped with a warning and therefore score as incorrect downstream.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfpe/ingest.hpp"

namespace dfpe {

struct EndpointSpec {
  std::string model_id;
  std::string base_url;    // e.g. "http://localhost:8000/v1"
  std::string model_name;  // "model" field of the request; defaults to model_id
  std::string auth_env;    // environment variable with the bearer token, optional
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int max_concurrency = 1;
  std::string template_id = "mmlu_5shot";
  double initial_backoff_ms = 500.0;
  double max_backoff_ms = 30000.0;
  double min_interval_ms = 0.0;  // minimum spacing between request starts
  int max_tokens = 0;            // omitted from the request when 0

  void validate() const;
};

// Accepts a JSON array of endpoint objects or {"endpoints": [...]}.
std::vector<EndpointSpec> parse_endpoints(const std::string& text);
std::vector<EndpointSpec> load_endpoints(const std::filesystem::path& path);

struct PromptTemplate {
  std::string id;
  std::string system;
  // Placeholders: {subject}, {examples}, {question}.
  std::string user;
  // Placeholders: {question}, {choices}.
  std::string question_format = "{question}\n{choices}\nAnswer:";
  // Placeholders: {question}, {choices}, {answer}.
  std::string example_format = "{question}\n{choices}\nAnswer: {answer}\n\n";
  // Placeholders: {label}, {text}.
  std::string choice_format = "{label}. {text}";
  int shots = 5;
};

std::map<std::string, PromptTemplate> parse_templates(const std::string& text);
std::map<std::string, PromptTemplate> load_templates(const std::filesystem::path& path);

struct ChatPrompt {
  std::string system;
  std::string user;
};

// Few-shot examples are the first `shots` validation questions of the
// subject (question_id order), excluding the question being asked.
ChatPrompt render_prompt(const PromptTemplate& tmpl, const Dataset& dataset,
                         const QuestionRecord& question);

// A label stated as "answer is X" or "Answer: X" (case-insensitive); otherwise
// the first standalone choice label in the response; otherwise the choice whose
// text is the longest exact substring of the response; otherwise nullopt.
std::optional<std::string> extract_choice(const std::string& response,
                                          const QuestionRecord& question);

std::string cache_key(const std::string& model_id, const ChatPrompt& prompt);

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  // Write-then-rename, safe against concurrent readers.
  void put(const std::string& key, const std::string& model_id, const std::string& response) const;

 private:
  std::filesystem::path dir_;
};

struct HttpResult {
  int status = 0;  // 0 when no response arrived
  std::string body;
  std::string error;
};

// POSTs `body` to `<base_url>/chat/completions`. Empty token means no auth.
using ChatTransport = std::function<HttpResult(const EndpointSpec& endpoint, const std::string& body,
                                               const std::string& token)>;

ChatTransport http_transport();

std::string chat_request_body(const EndpointSpec& endpoint, const ChatPrompt& prompt);
// Content of choices[0].message.content. Throws RuntimeError when absent.
std::string chat_response_text(const std::string& body);

bool is_transient_status(int status);

struct CollectStats {
  std::size_t cache_hits = 0;
  std::size_t network_calls = 0;
  std::size_t retries = 0;
  std::size_t unanswered = 0;
  std::size_t failed = 0;
};

struct CollectResult {
  std::vector<PredictionRecord> records;  // sorted by (model, subject, question)
  CollectStats stats;
  std::vector<std::string> warnings;
};

CollectResult collect_predictions(const std::vector<EndpointSpec>& endpoints,
                                  const std::map<std::string, PromptTemplate>& templates,
                                  const Dataset& dataset, const std::filesystem::path& cache_dir,
                                  const ChatTransport& transport = http_transport());

}  // namespace dfpe
