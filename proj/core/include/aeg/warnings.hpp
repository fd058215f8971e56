#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <mutex>
#include <string>
#include <vector>

namespace aeg {

struct Warning {
  std::string stage;    // e.g. "semantic_edges", "score"
  std::string subject;  // node or area id
  std::string message;

  auto operator<=>(const Warning&) const = default;
};

/// Thread-safe collector. `sorted()` gives a schedule-independent order.
class WarningLog {
 public:
  void add(std::string stage, std::string subject, std::string message) {
    std::lock_guard lock(mutex_);
    items_.push_back({std::move(stage), std::move(subject), std::move(message)});
  }

  std::vector<Warning> sorted() const {
    std::lock_guard lock(mutex_);
    std::vector<Warning> out = items_;
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

  void clear() {
    std::lock_guard lock(mutex_);
    items_.clear();
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const Warning& w : sorted()) out.push_back({{"stage", w.stage}, {"subject", w.subject}, {"message", w.message}});
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<Warning> items_;
};

}  // namespace aeg
