#pragma once

#include "aeg/llm/parse.hpp"
#include "aeg/llm/prompts.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <string>

namespace aeg::llm {

/// A multimodal completion backend. Implementations must be safe to call
/// from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const PromptRequest& request) = 0;
};

/// Decorator counting calls, in total and per template.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}

  std::string complete(const PromptRequest& request) override;

  std::size_t total() const { return total_.load(); }
  std::size_t count(TemplateId id) const;
  void reset();

 private:
  Backend& inner_;
  std::atomic<std::size_t> total_{0};
  mutable std::mutex mutex_;
  std::map<TemplateId, std::size_t> per_template_;
};

/// Completes and parses against the template's output schema. A response
/// that fails to parse is re-requested once with kFormatReminder appended;
/// a second failure propagates Error{ParseFailure}.
StructuredFields complete_structured(Backend& backend, const PromptRequest& request);

/// The same request with the format reminder appended to the user text.
PromptRequest with_format_reminder(PromptRequest request);

}  // namespace aeg::llm
