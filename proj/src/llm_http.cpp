#include <chrono>
#include <memory>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "wese/errors.hpp"
#include "wese/llm.hpp"
#include "wese/log.hpp"
#include "wese/text.hpp"

namespace wese::llm {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // httplib client target
};

ParsedUrl parse_base_url(const std::string& base_url) {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw ConfigError("endpoint base_url must start with http:// or https://: " + base_url);
  }
  return ParsedUrl{base_url};
}

bool mentions_context_overflow(const std::string& body) {
  std::string lower = to_lower(body);
  return lower.find("context length") != std::string::npos ||
         lower.find("context_length") != std::string::npos ||
         lower.find("maximum context") != std::string::npos;
}

int backoff_with_jitter(int base_ms, int attempt) {
  static thread_local std::mt19937 rng{std::random_device{}()};
  std::uniform_int_distribution<int> jitter(0, 50);
  return base_ms * (1 << attempt) + jitter(rng);
}

}  // namespace

HttpBackend::HttpBackend(EndpointConfig config) : config_(std::move(config)) {
  parse_base_url(config_.base_url);  // validate eagerly
}

HttpBackend::~HttpBackend() = default;

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  nlohmann::json body;
  if (!config_.model.empty()) body["model"] = config_.model;
  body["prompt"] = request.prompt;
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_with_jitter(config_.backoff_ms, attempt - 1)));
    }
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_connection_timeout(config_.timeout_s, 0);

    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      log::warn("completion attempt " + std::to_string(attempt + 1) + " failed, " + last_error);
      continue;  // retryable
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "endpoint status " + std::to_string(res->status);
      log::warn("completion attempt " + std::to_string(attempt + 1) + " failed, " + last_error);
      continue;  // retryable
    }
    if (res->status != 200) {
      if (mentions_context_overflow(res->body)) {
        throw ContextOverflowError("endpoint reported context overflow: " + res->body);
      }
      throw BackendError("endpoint status " + std::to_string(res->status) + ": " + res->body, false);
    }

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      throw BackendError("malformed completion response: " + res->body.substr(0, 200), false);
    }
    CompletionResult out;
    out.text = j["choices"][0].value("text", std::string());
    if (j.contains("usage")) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0ll);
      out.usage.completion_tokens = j["usage"].value("completion_tokens", 0ll);
    } else {
      log::warn("completion response carried no usage block");
    }
    return out;
  }
  throw BackendError("completion failed after " + std::to_string(config_.max_retries) +
                         " attempts: " + last_error,
                     true);
}

}  // namespace wese::llm
