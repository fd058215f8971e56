#pragma once

#include "aeg/llm/prompts.hpp"

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace aeg::llm {

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);

/// Content address of a request: SHA-256 over the length-prefixed template
/// id, system text, user text, image content digest and model id.
struct CacheKey {
  std::string hex;

  static CacheKey of(const PromptRequest& request);
  bool operator==(const CacheKey&) const = default;
};

/// One file per key under `directory`, holding the raw response bytes.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<std::string> get(const CacheKey& key) const;
  /// Writes are atomic and serialized per key.
  void put(const CacheKey& key, const std::string& response);

  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::mutex& stripe(const CacheKey& key);

  std::filesystem::path directory_;
  std::array<std::mutex, 16> stripes_;
};

}  // namespace aeg::llm
