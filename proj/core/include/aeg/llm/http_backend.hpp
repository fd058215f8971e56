#pragma once

#include "aeg/llm/backend.hpp"
#include "aeg/llm/cache.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

namespace aeg::llm {

inline constexpr const char* kApiKeyEnv = "AEG_LLM_API_KEY";

struct HttpConfig {
  /// Full URL of an OpenAI-compatible chat-completions endpoint.
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = kApiKeyEnv;
  int max_retries = 3;
  /// Retry i (0-based) sleeps backoff_base * 2^i: 1 s, 2 s, 4 s by default.
  std::chrono::milliseconds backoff_base{1000};
  int concurrency = 4;
  std::chrono::seconds timeout{120};
  std::optional<std::filesystem::path> cache_dir;
};

/// Chat-completions request body: model, system + user messages (the user
/// message carries a base64 data-URL image part when present), temperature.
nlohmann::json chat_request_body(const PromptRequest& request);

/// `choices[0].message.content` of a chat-completions response.
std::string parse_chat_response(const std::string& body);

class HttpBackend : public Backend {
 public:
  /// Throws Error{AuthMissing} if the API key variable is unset or empty.
  explicit HttpBackend(HttpConfig config);

  /// Cache hit -> cached bytes without network traffic. Otherwise POSTs,
  /// retrying transport failures, 429 and 5xx with exponential backoff.
  /// Exhausted retries raise RateLimited (last status 429) or Transport.
  std::string complete(const PromptRequest& request) override;

  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  std::string post(const std::string& body);

  HttpConfig config_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<ResponseCache> cache_;
  std::counting_semaphore<64> slots_;
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace aeg::llm
