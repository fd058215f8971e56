#include "aeg/llm/mock_backend.hpp"

#include "aeg/error.hpp"
#include "aeg/io.hpp"
#include "aeg/llm/parse.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

namespace aeg::llm {

namespace {

using nlohmann::json;

std::string lower(const std::string& s) { return normalize_name(s); }

/// One line free of the markup the response parser strips (quotes, doubled
/// asterisks, bracket-only values); nullopt when nothing usable is left.
std::optional<std::string> single_line(const std::string& value) {
  std::string text = value;
  for (std::string_view q : {"\u201c", "\u201d", "\u201e", "\u201f", "\u2033", "\u00ab", "\u00bb"}) {
    for (std::size_t pos = 0; (pos = text.find(q, pos)) != std::string::npos;) text.erase(pos, q.size());
  }
  std::string out;
  bool space = false;
  for (char c : text) {
    if (c == '"' || c == '\n' || c == '\r' || c == '\t' || c == ' ') {
      space = !out.empty();
      continue;
    }
    if (c == '*' && !out.empty() && out.back() == '*' && !space) continue;
    if (space) out += ' ';
    space = false;
    out += c;
  }
  if (out.find_first_not_of("[]. ") == std::string::npos) return std::nullopt;
  return out;
}

std::string sanitize(const std::string& value, const std::string& fallback) {
  if (auto line = single_line(value)) return *line;
  return single_line(fallback).value_or("unspecified");
}

std::string meta_string(const PromptRequest& request, const char* key, const std::string& fallback = "object") {
  auto it = request.meta.find(key);
  if (it == request.meta.end() || !it->is_string() || it->get<std::string>().empty()) return fallback;
  return it->get<std::string>();
}

std::string get_or(const json& obj, const char* key) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string();
}

void emit(std::ostringstream& os, int index, const std::string& name, const std::string& value) {
  os << index << ". \"" << name << "\": " << value << "\n";
}

std::string affordance_response(const MockRules& rules, const PromptRequest& request, bool updated) {
  const std::string category = meta_string(request, "category");
  const std::string room = meta_string(request, "room", "house");
  MockAffordance base;
  if (const MockAffordance* rule = rules.affordance(category)) base = *rule;

  std::string geometry = sanitize(base.geometry_position, "A " + category + " in the " + room + ".");
  std::string relation = sanitize(base.relationship, "Placed among the surrounding objects of the " + room + ".");
  std::string usage = sanitize(base.unique_usage, "Holds items commonly used around a " + category + ".");
  std::string fine = sanitize(base.fine_grained_category, category);

  if (updated) {
    // The update keeps the local record and tags it; the category is only
    // replaced when the rules provide an updated one.
    const json local = request.meta.value("local", json::object());
    geometry = "UPDATED: " + sanitize(get_or(local, "geometry_position"), geometry);
    relation = "UPDATED: " + sanitize(get_or(local, "relationship"), relation);
    usage = "UPDATED: " + sanitize(get_or(local, "unique_usage"), usage);
    fine = sanitize(base.updated_fine_grained_category, sanitize(get_or(local, "fine_grained_category"), fine));
  }

  std::ostringstream os;
  os << "\"\"\"\n";
  emit(os, 1, "Geometry & Position", geometry);
  emit(os, 2, "Relationship", relation);
  emit(os, 3, "Unique Usage", usage);
  emit(os, 4, "Fine-Grained Category", fine);
  os << "\"\"\"\n";
  return os.str();
}

std::string carriable_response(const MockRules& rules, const PromptRequest& request) {
  const std::string category = meta_string(request, "category");
  MockAffordance base;
  if (const MockAffordance* rule = rules.affordance(category)) base = *rule;
  std::ostringstream os;
  emit(os, 1, "Geometry & Functionality",
       sanitize(base.geometry_functionality, "A portable " + category + " used around the house."));
  emit(os, 2, "Fine-Grained Category", sanitize(base.fine_grained_category, category));
  return os.str();
}

std::string area_response(const PromptRequest& request) {
  const std::string room = meta_string(request, "room", "room");
  std::set<std::string> categories;
  for (const json& m : request.meta.value("members", json::array())) {
    const std::string c = get_or(m, "category");
    if (!c.empty()) categories.insert(lower(c));
  }
  std::vector<std::string> names(categories.begin(), categories.end());
  std::string name;
  for (std::size_t i = 0; i < names.size() && i < 2; ++i) name += (i ? " and " : "") + names[i];
  if (name.empty()) name = "open";
  std::string listing;
  for (std::size_t i = 0; i < names.size(); ++i) {
    listing += (i == 0 ? "" : (i + 1 == names.size() ? " and " : ", ")) + names[i];
  }
  std::ostringstream os;
  emit(os, 1, "Name", sanitize(name + " area", "area"));
  emit(os, 2, "Description",
       sanitize("An area of the " + room + " containing " + (listing.empty() ? "no objects" : listing) + ".",
                "An area."));
  return os.str();
}

std::string semantic_response(const MockRules& rules, const PromptRequest& request) {
  const std::string id = meta_string(request, "id");
  const std::string category = lower(meta_string(request, "category"));
  std::vector<std::pair<std::string, std::string>> found;
  if (auto it = rules.semantic_rules.find(category); it != rules.semantic_rules.end()) {
    const json members = request.meta.value("room_members", json::array());
    for (const MockSemanticRule& rule : it->second) {
      for (const json& m : members) {
        const std::string member_id = get_or(m, "id");
        if (member_id != id && lower(get_or(m, "category")) == lower(rule.target_category)) {
          found.emplace_back(member_id, rule.label);
          break;
        }
      }
    }
  }
  std::ostringstream os;
  emit(os, 1, "Given Receptacle", sanitize(id, "receptacle"));
  os << "2. \"objects that have functional relationships\":\n";
  if (found.empty()) os << "    (1) No object\n";
  for (std::size_t i = 0; i < found.size(); ++i) os << "    (" << i + 1 << ") " << sanitize(found[i].first, "object") << "\n";
  os << "3. \"additional functional edge\":\n";
  if (found.empty()) os << "    (1) No edge\n";
  for (std::size_t i = 0; i < found.size(); ++i) {
    os << "    (" << i + 1 << ") " << sanitize(found[i].second, "functionally related") << "\n";
  }
  return os.str();
}

std::string score_response(const MockRules& rules, const PromptRequest& request) {
  const std::string carriable_category = meta_string(request, "carriable_category");
  const std::string fine = meta_string(request, "receptacle_fine_grained_category", "");
  const std::string category = meta_string(request, "receptacle_category", "");
  const int score = rules.score(carriable_category, {meta_string(request, "receptacle", ""), fine, category});
  std::ostringstream os;
  os << "\"\"\"\n";
  emit(os, 1, "name of the carriable", sanitize(meta_string(request, "carriable"), "object"));
  emit(os, 2, "name of the receptacle", sanitize(meta_string(request, "receptacle"), "receptacle"));
  emit(os, 3, "Score", std::to_string(score));
  emit(os, 4, "Analysis",
       sanitize("Rule-based rating for placing the " + carriable_category + " on the " +
                    (fine.empty() ? category : fine) + ".",
                "Rule-based rating."));
  os << "\"\"\"\n";
  return os.str();
}

std::string decision_response(const MockRules& rules, const PromptRequest& request) {
  const std::string carriable_category = meta_string(request, "carriable_category");
  std::string best;
  int best_score = -1;
  for (const json& c : request.meta.value("candidates", json::array())) {
    const int s =
        rules.score(carriable_category, {get_or(c, "id"), get_or(c, "fine_grained_category"), get_or(c, "category")});
    if (s > best_score) {
      best_score = s;
      best = get_or(c, "id");
    }
  }
  std::ostringstream os;
  emit(os, 1, "The best receptacle", sanitize(best, "none"));
  emit(os, 2, "Analysis",
       "It has the highest rule-based rating (" + std::to_string(std::max(best_score, 0)) +
           ") among the candidates.");
  return os.str();
}

}  // namespace

MockRules MockRules::from_json(const json& root) {
  if (!root.is_object()) throw Error(ErrorCode::SchemaViolation, "mock rules: expected an object");
  MockRules rules;
  try {
    rules.default_score = root.value("default_score", 50);
    const json score_rules = root.value("score_rules", json::object());
    const json affordance_rules = root.value("affordance_rules", json::object());
    const json semantic_rules = root.value("semantic_rules", json::object());
    for (const auto& [carriable, targets] : score_rules.items()) {
      for (const auto& [receptacle, score] : targets.items()) {
        rules.score_rules[lower(carriable)][lower(receptacle)] = score.get<int>();
      }
    }
    for (const auto& [category, r] : affordance_rules.items()) {
      MockAffordance a;
      a.geometry_position = r.value("geometry_position", "");
      a.relationship = r.value("relationship", "");
      a.unique_usage = r.value("unique_usage", "");
      a.fine_grained_category = r.value("fine_grained_category", "");
      a.updated_fine_grained_category = r.value("updated_fine_grained_category", "");
      a.geometry_functionality = r.value("geometry_functionality", "");
      rules.affordance_rules[lower(category)] = std::move(a);
    }
    for (const auto& [category, list] : semantic_rules.items()) {
      for (const json& r : list) {
        rules.semantic_rules[lower(category)].push_back({r.at("target").get<std::string>(), r.at("label").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("mock rules: ") + e.what());
  }
  return rules;
}

MockRules MockRules::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

json MockRules::to_json() const {
  json root;
  root["default_score"] = default_score;
  root["score_rules"] = json::object();
  for (const auto& [c, targets] : score_rules) {
    for (const auto& [r, s] : targets) root["score_rules"][c][r] = s;
  }
  root["affordance_rules"] = json::object();
  for (const auto& [c, a] : affordance_rules) {
    root["affordance_rules"][c] = {{"geometry_position", a.geometry_position},
                                   {"relationship", a.relationship},
                                   {"unique_usage", a.unique_usage},
                                   {"fine_grained_category", a.fine_grained_category},
                                   {"updated_fine_grained_category", a.updated_fine_grained_category},
                                   {"geometry_functionality", a.geometry_functionality}};
  }
  root["semantic_rules"] = json::object();
  for (const auto& [c, list] : semantic_rules) {
    for (const auto& r : list) root["semantic_rules"][c].push_back({{"target", r.target_category}, {"label", r.label}});
  }
  return root;
}

int MockRules::score(const std::string& carriable, const std::vector<std::string>& receptacle_keys) const {
  auto it = score_rules.find(lower(carriable));
  if (it == score_rules.end()) return default_score;
  for (const std::string& key : receptacle_keys) {
    if (key.empty()) continue;
    if (auto hit = it->second.find(lower(key)); hit != it->second.end()) return hit->second;
  }
  return default_score;
}

const MockAffordance* MockRules::affordance(const std::string& category) const {
  auto it = affordance_rules.find(lower(category));
  return it == affordance_rules.end() ? nullptr : &it->second;
}

std::string mock_complete(const MockRules& rules, const PromptRequest& request) {
  switch (request.template_id) {
    case TemplateId::P1: return affordance_response(rules, request, false);
    case TemplateId::P4: return affordance_response(rules, request, true);
    case TemplateId::Carriable: return carriable_response(rules, request);
    case TemplateId::P2: return area_response(request);
    case TemplateId::P3: return semantic_response(rules, request);
    case TemplateId::P5: return score_response(rules, request);
    case TemplateId::P6: return decision_response(rules, request);
  }
  return {};
}

}  // namespace aeg::llm
