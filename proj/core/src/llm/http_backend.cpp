#include "aeg/llm/http_backend.hpp"

#include "aeg/error.hpp"
#include "aeg/io.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

namespace aeg::llm {

namespace {

std::string image_mime(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

nlohmann::json chat_request_body(const PromptRequest& request) {
  nlohmann::json user_content = nlohmann::json::array();
  user_content.push_back({{"type", "text"}, {"text", request.user_text}});
  if (request.image) {
    const std::string url =
        "data:" + image_mime(*request.image) + ";base64," + base64_encode(read_text(*request.image));
    user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  return {{"model", request.model_id},
          {"temperature", request.temperature},
          {"messages",
           {{{"role", "system"}, {"content", request.system_text}},
            {{"role", "user"}, {"content", std::move(user_content)}}}}};
}

std::string parse_chat_response(const std::string& body) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::Transport, "response is not JSON: " + excerpt(body));
  }
  try {
    return json.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Transport, "response has no choices[0].message.content: " + excerpt(body));
  }
}

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.concurrency, 1, 64)) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::AuthMissing, "environment variable " + config_.api_key_env + " is not set");
  }
  api_key_ = key;

  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url_re)) {
    throw Error(ErrorCode::InvalidInput, "malformed endpoint URL '" + config_.endpoint + "'");
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (config_.cache_dir) cache_ = std::make_unique<ResponseCache>(*config_.cache_dir);
}

std::string HttpBackend::complete(const PromptRequest& request) {
  std::optional<CacheKey> key;
  if (cache_) {
    key = CacheKey::of(request);
    if (auto hit = cache_->get(*key)) return *hit;
  }
  std::string text = parse_chat_response(post(chat_request_body(request).dump()));
  if (cache_) cache_->put(*key, text);
  return text;
}

std::string HttpBackend::post(const std::string& body) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{slots_};

  int last_status = 0;
  std::string last_detail;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    ++network_calls_;
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_detail = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_detail = excerpt(res->body);
    if (res->status != 429 && res->status < 500) break;
  }
  if (last_status == 429) {
    throw Error(ErrorCode::RateLimited, "HTTP 429 after " + std::to_string(config_.max_retries) +
                                            " retries: " + last_detail);
  }
  throw Error(ErrorCode::Transport, "status=" + std::to_string(last_status) + " body=" + last_detail);
}

}  // namespace aeg::llm
