#include "aeg/llm/cache.hpp"

#include "aeg/error.hpp"
#include "aeg/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <vector>

namespace aeg::llm {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string base64_encode(std::string_view data) {
  std::vector<unsigned char> out(4 * ((data.size() + 2) / 3) + 1);
  const int n = EVP_EncodeBlock(out.data(), reinterpret_cast<const unsigned char*>(data.data()),
                                static_cast<int>(data.size()));
  return std::string(reinterpret_cast<const char*>(out.data()), static_cast<std::size_t>(n));
}

CacheKey CacheKey::of(const PromptRequest& request) {
  std::string material;
  auto field = [&material](std::string_view value) {
    material += std::to_string(value.size());
    material += ':';
    material += value;
    material += ';';
  };
  field(to_string(request.template_id));
  field(request.system_text);
  field(request.user_text);
  field(request.image ? sha256_hex(read_text(*request.image)) : std::string());
  field(request.model_id);
  return CacheKey{sha256_hex(material)};
}

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  const auto path = directory_ / key.hex;
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_text(path);
}

void ResponseCache::put(const CacheKey& key, const std::string& response) {
  std::lock_guard lock(stripe(key));
  write_text_atomic(directory_ / key.hex, response);
}

std::mutex& ResponseCache::stripe(const CacheKey& key) {
  const std::size_t index = key.hex.empty() ? 0 : std::hash<std::string>{}(key.hex) % stripes_.size();
  return stripes_[index];
}

}  // namespace aeg::llm
