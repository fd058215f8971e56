#include "aeg/llm/backend.hpp"

#include "aeg/error.hpp"

namespace aeg::llm {

std::string CountingBackend::complete(const PromptRequest& request) {
  ++total_;
  {
    std::lock_guard lock(mutex_);
    ++per_template_[request.template_id];
  }
  return inner_.complete(request);
}

std::size_t CountingBackend::count(TemplateId id) const {
  std::lock_guard lock(mutex_);
  auto it = per_template_.find(id);
  return it == per_template_.end() ? 0 : it->second;
}

void CountingBackend::reset() {
  std::lock_guard lock(mutex_);
  per_template_.clear();
  total_ = 0;
}

PromptRequest with_format_reminder(PromptRequest request) {
  request.user_text += "\n";
  request.user_text += kFormatReminder;
  return request;
}

StructuredFields complete_structured(Backend& backend, const PromptRequest& request) {
  const auto& schema = template_spec(request.template_id).output_schema;
  try {
    return parse_numbered_fields(backend.complete(request), schema);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseFailure) throw;
  }
  return parse_numbered_fields(backend.complete(with_format_reminder(request)), schema);
}

}  // namespace aeg::llm
