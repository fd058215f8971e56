#include "aeg/llm/parse.hpp"

#include "aeg/error.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <sstream>

namespace aeg::llm {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

std::string normalize_quotes(std::string_view text) {
  std::string s(text);
  for (std::string_view q : {"“", "”", "„", "‟", "″", "«", "»"}) {
    replace_all(s, q, "\"");
  }
  for (std::string_view q : {"‘", "’", "‚", "′"}) replace_all(s, q, "'");
  replace_all(s, "•", "-");
  replace_all(s, "\r", "");
  return s;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Strips markdown emphasis, bullets and quote markers from a line.
std::string strip_markdown(std::string_view line) {
  std::string s(line);
  replace_all(s, "**", "");
  std::size_t b = 0;
  while (b < s.size() && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '-' || s[b] == '*' ||
                          s[b] == '>' || s[b] == '#')) {
    ++b;
  }
  return trim(std::string_view(s).substr(b));
}

/// Removes wrapping brackets/quotes and trailing punctuation from a value.
std::string clean_value(std::string_view raw) {
  std::string v = trim(raw);
  for (bool changed = true; changed && !v.empty();) {
    changed = false;
    if (v.size() >= 2 && v.front() == '[' && v.back() == '.' && v[v.size() - 2] == ']') {
      v.pop_back();
      changed = true;
    }
    if (v.size() >= 2 && ((v.front() == '[' && v.back() == ']') || (v.front() == '"' && v.back() == '"'))) {
      v = trim(std::string_view(v).substr(1, v.size() - 2));
      changed = true;
    }
  }
  return v;
}

bool is_no_object(std::string_view item) {
  std::string n = normalize_name(item);
  while (!n.empty() && std::ispunct(static_cast<unsigned char>(n.back()))) n.pop_back();
  return n == "no object" || n == "no objects" || n == "none" || n.empty();
}

struct Slot {
  std::string value;
  std::vector<std::string> items;
  bool seen = false;
};

const std::regex& header_regex() {
  // [index][.):] "name" : value   -- index and quotes optional
  static const std::regex re(R"re(^(?:(\d+)\s*[.):]\s*)?(?:"([^"]+)"|([A-Za-z][A-Za-z &/'-]*?))\s*:\s*(.*)$)re");
  return re;
}

const std::regex& list_item_regex() {
  static const std::regex re(R"(^\(?(\d+)\)\s*(.*)$)");
  return re;
}

}  // namespace

std::string normalize_name(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

const std::string& StructuredFields::at(std::string_view name) const {
  for (const auto& [key, value] : values) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::ParseFailure, "field '" + std::string(name) + "' not present");
}

const std::vector<std::string>& StructuredFields::list(std::string_view name) const {
  auto it = lists.find(std::string(name));
  if (it == lists.end()) throw Error(ErrorCode::ParseFailure, "list field '" + std::string(name) + "' not present");
  return it->second;
}

std::optional<long> parse_leading_integer(std::string_view value) {
  static const std::regex re(R"((-?\d+))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(value.begin(), value.end(), m, re)) return std::nullopt;
  try {
    return std::stol(m.str(1));
  } catch (const std::out_of_range&) {
    return m.str(1).front() == '-' ? -1L : 1000000L;
  }
}

StructuredFields parse_numbered_fields(std::string_view text, std::span<const FieldSpec> schema) {
  if (schema.empty()) throw Error(ErrorCode::InvalidInput, "empty output schema");

  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < schema.size(); ++i) by_name.emplace(normalize_name(schema[i].name), i);

  std::vector<Slot> slots(schema.size());
  std::optional<std::size_t> current;
  bool pending_blank = false;

  std::istringstream lines(normalize_quotes(text));
  for (std::string raw; std::getline(lines, raw);) {
    const std::string line = strip_markdown(raw);
    if (line.empty()) {
      pending_blank = true;
      if (current && !schema[*current].list) current.reset();
      continue;
    }
    if (line.rfind("\"\"\"", 0) == 0 || line.rfind("```", 0) == 0) {
      current.reset();
      continue;
    }

    std::smatch m;
    if (std::regex_match(line, m, header_regex())) {
      const std::string name = normalize_name(m[2].matched ? m[2].str() : m[3].str());
      if (auto it = by_name.find(name); it != by_name.end()) {
        current = it->second;
        Slot& slot = slots[*current];
        slot = Slot{};
        slot.seen = true;
        slot.value = trim(m[4].str());
        pending_blank = false;
        continue;
      }
      if (m[1].matched) {
        // Numbered entry outside the schema ends the current field.
        current.reset();
        continue;
      }
    }

    if (!current) continue;
    Slot& slot = slots[*current];
    if (schema[*current].list) {
      std::smatch item;
      if (std::regex_match(line, item, list_item_regex())) {
        slot.items.push_back(trim(item[2].str()));
      } else if (pending_blank) {
        current.reset();
      } else if (!slot.items.empty()) {
        slot.items.back() += " " + line;
      } else {
        slot.value += (slot.value.empty() ? "" : " ") + line;
      }
    } else {
      slot.value += (slot.value.empty() ? "" : " ") + line;
    }
    pending_blank = false;
  }

  StructuredFields out;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    Slot& slot = slots[i];
    if (schema[i].list) {
      if (!slot.seen) {
        missing.push_back(schema[i].name);
        continue;
      }
      std::vector<std::string> items;
      if (slot.items.empty() && !slot.value.empty()) {
        // Inline "a, b, c" instead of a numbered sub-list.
        std::string part;
        std::istringstream parts(clean_value(slot.value));
        while (std::getline(parts, part, ',')) slot.items.push_back(part);
      }
      for (const std::string& item : slot.items) {
        std::string cleaned = clean_value(item);
        if (!is_no_object(cleaned)) items.push_back(std::move(cleaned));
      }
      std::string joined;
      for (const auto& item : items) joined += (joined.empty() ? "" : "; ") + item;
      out.values.emplace_back(schema[i].name, joined);
      out.lists.emplace(schema[i].name, std::move(items));
    } else {
      std::string value = clean_value(slot.value);
      if (!slot.seen || value.empty()) {
        missing.push_back(schema[i].name);
        continue;
      }
      out.values.emplace_back(schema[i].name, std::move(value));
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing fields:";
    for (const auto& name : missing) msg += " \"" + name + "\"";
    throw Error(ErrorCode::ParseFailure, msg);
  }
  return out;
}

}  // namespace aeg::llm
