#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aeg::llm {

/// Prompt templates. P1..P6 are the local analysis, area analysis, semantic
/// edge, affordance update, placement scorer and placement decision prompts;
/// Carriable is the reduced two-field analysis for carriable objects.
enum class TemplateId { P1, P2, P3, P4, P5, P6, Carriable };

std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view text);

struct FieldSpec {
  std::string name;
  bool list = false;  // value is a "(1) ... (2) ..." sub-list
};

struct TemplateSpec {
  TemplateId id;
  std::string system_text;
  /// User text with `{slot}` placeholders.
  std::string user_format;
  std::vector<std::string> required_slots;
  std::vector<std::string> optional_slots;
  std::vector<FieldSpec> output_schema;
};

const TemplateSpec& template_spec(TemplateId id);

using Slots = std::map<std::string, std::string>;

struct PromptRequest {
  TemplateId template_id = TemplateId::P1;
  std::string system_text;
  std::string user_text;
  std::optional<std::filesystem::path> image;
  std::string model_id;
  double temperature = 0.0;
  /// Structured view of the slots for rule-based backends. Not sent over the
  /// wire and not part of the cache key (the rendered text already is).
  nlohmann::json meta = nlohmann::json::object();
};

struct RenderOptions {
  std::string model_id = "gpt-4o";
  double temperature = 0.0;
  /// Hard cap on (system + user characters) / 4.
  std::size_t token_budget = 8000;
};

/// Fills the template. Throws Error{MissingSlot} naming the first missing
/// required slot, Error{PromptTooLong} when the estimate exceeds the budget,
/// and Error{Precondition} when `image` names a file that does not exist.
PromptRequest render_prompt(TemplateId id, const Slots& slots,
                            std::optional<std::filesystem::path> image = std::nullopt,
                            const RenderOptions& options = {});

/// Line appended to the user text when a response has to be re-requested.
inline constexpr std::string_view kFormatReminder = "Follow the output format exactly.";

}  // namespace aeg::llm
