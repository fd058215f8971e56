#pragma once

#include "aeg/llm/backend.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aeg::llm {

struct MockAffordance {
  std::string geometry_position;
  std::string relationship;
  std::string unique_usage;
  std::string fine_grained_category;
  /// Fine-grained category reported after the room-context update; the local
  /// one is kept when absent.
  std::string updated_fine_grained_category;
  /// Used by the carriable analysis.
  std::string geometry_functionality;
};

struct MockSemanticRule {
  std::string target_category;
  std::string label;
};

/// Rule tables for the offline backend. Keys are matched case-insensitively.
///
/// File layout (JSON):
///   default_score    integer, default 50
///   score_rules      {carriable category or activity: {receptacle id or category: score}}
///   affordance_rules {category: {geometry_position, relationship, unique_usage,
///                     fine_grained_category, updated_fine_grained_category?,
///                     geometry_functionality?}}
///   semantic_rules   {category: [{target, label}]}   (optional)
struct MockRules {
  int default_score = 50;
  std::map<std::string, std::map<std::string, int>> score_rules;
  std::map<std::string, MockAffordance> affordance_rules;
  std::map<std::string, std::vector<MockSemanticRule>> semantic_rules;

  static MockRules from_json(const nlohmann::json& json);
  static MockRules load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Score for a pair. `receptacle_keys` are tried in order (id, fine-grained
  /// category, category); empty keys are skipped. Falls back to default_score.
  int score(const std::string& carriable, const std::vector<std::string>& receptacle_keys) const;
  const MockAffordance* affordance(const std::string& category) const;
};

/// Deterministic text in the template's output format, computed from the
/// request's `meta` (see the callers in affordance/tidy for the keys).
std::string mock_complete(const MockRules& rules, const PromptRequest& request);

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockRules rules) : rules_(std::move(rules)) {}

  std::string complete(const PromptRequest& request) override { return mock_complete(rules_, request); }
  const MockRules& rules() const { return rules_; }

 private:
  MockRules rules_;
};

}  // namespace aeg::llm
