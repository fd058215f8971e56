#pragma once

#include "aeg/llm/prompts.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aeg::llm {

/// Fields extracted from a numbered model response, in schema order.
struct StructuredFields {
  std::vector<std::pair<std::string, std::string>> values;
  /// Items of list-valued fields; "No object" yields an empty list.
  std::map<std::string, std::vector<std::string>> lists;

  const std::string& at(std::string_view name) const;
  const std::vector<std::string>& list(std::string_view name) const;
};

/// Extracts `<index>. "<name>": <value>` entries. Tolerates curly quotes,
/// brackets around values, markdown bullets/bold and prose around the block.
/// Continuation lines are joined with single spaces. Throws
/// Error{ParseFailure} listing every missing field.
StructuredFields parse_numbered_fields(std::string_view text, std::span<const FieldSpec> schema);

/// First integer in `value` (e.g. "[85]" -> 85, "Score is 150/100" -> 150).
std::optional<long> parse_leading_integer(std::string_view value);

/// Lower-cased, whitespace-collapsed form used for name matching.
std::string normalize_name(std::string_view text);

}  // namespace aeg::llm
