#include "aeg/tidy.hpp"

#include "aeg/error.hpp"
#include "aeg/llm/parse.hpp"
#include "aeg/parallel.hpp"
#include "aeg/rng.hpp"

#include <algorithm>
#include <array>

namespace aeg::tidy {

namespace {

using nlohmann::json;

constexpr std::string_view kMisplacementStandard =
    "- 100 points: the placement perfectly meets the task requirements;\n"
    "- 0 points: the placement contradicts the task requirements and might negatively impact the task, "
    "and thus needs to be rearranged;\n"
    "- 50 points: It is difficult to judge whether rearranging this object is related to the task.";

constexpr std::string_view kRetrievalStandard =
    "- 100 points: this receptacle is the most appropriate location in the entire house for placing the "
    "carriable to fulfill the task;\n"
    "- 0 points: this receptacle is entirely unsuitable for placing the carriable, under any circumstances "
    "from the task's perspective;\n"
    "- 50 points: this receptacle is a plausible option only under specific conditions.";

constexpr std::string_view kActivityStandard =
    "- 100 points: this object is highly relevant to the activity and is a natural place to carry it out;\n"
    "- 0 points: this object has no relevance to the activity;\n"
    "- 50 points: this object is relevant to the activity only under specific conditions.";

constexpr std::array<std::string_view, 2> kFixedExamples = {
    "Placing a toothbrush on the bathroom sink counter was scored 95.",
    "Placing a frying pan on the bed in the master bedroom was scored 5.",
};

constexpr std::array<std::string_view, 12> kExampleLibrary = {
    "Placing a toothbrush on the bathroom sink counter was scored 95.",
    "Placing a frying pan on the bed in the master bedroom was scored 5.",
    "Placing a novel on the living room bookshelf was scored 92.",
    "Placing a coffee mug on the kitchen counter next to the coffee machine was scored 90.",
    "Placing a pair of shoes on the dining table was scored 3.",
    "Placing a remote control on the coffee table in front of the sofa was scored 88.",
    "Placing a bath towel on the office desk was scored 12.",
    "Placing a laptop on the kitchen stove was scored 2.",
    "Placing a plant pot on the windowsill was scored 85.",
    "Placing a set of keys on the entryway console was scored 94.",
    "Placing a cereal box on the nightstand was scored 20.",
    "Placing a pillow on the armchair was scored 60.",
};

std::string lower_trim(const std::string& s) {
  std::string out = llm::normalize_name(s);
  while (!out.empty() && (out.back() == '.' || out.back() == ',')) out.pop_back();
  return out;
}

void sort_best_first(std::vector<std::pair<NodeId, int>>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
}

void require_enhanced(const SceneGraph& aeg) {
  if (!aeg.enhanced) throw Error(ErrorCode::GraphNotEnhanced, "graph not enhanced");
}

std::string area_of(const SceneGraph& graph, const NodeId& id) {
  if (!graph.hierarchy) return {};
  for (const auto& [room, areas] : graph.hierarchy->rooms) {
    for (const Area& a : areas) {
      if (std::binary_search(a.member_ids.begin(), a.member_ids.end(), id)) return a.id;
    }
  }
  return {};
}

}  // namespace

CalibrationVariant CalibrationVariant::parse(std::string_view text, std::uint64_t seed) {
  using K = Kind;
  for (K k : {K::FixedStandard, K::FixedExample, K::RandomExample, K::SelfGenerated, K::NoCalibration}) {
    if (to_string(k) == text) return {k, seed};
  }
  throw Error(ErrorCode::InvalidInput, "unknown calibration variant '" + std::string(text) + "'");
}

std::string_view to_string(CalibrationVariant::Kind kind) {
  switch (kind) {
    case CalibrationVariant::Kind::FixedStandard: return "fixed_standard";
    case CalibrationVariant::Kind::FixedExample: return "fixed_example";
    case CalibrationVariant::Kind::RandomExample: return "random_example";
    case CalibrationVariant::Kind::SelfGenerated: return "self_generated";
    case CalibrationVariant::Kind::NoCalibration: return "no_calibration";
  }
  return "fixed_standard";
}

std::string_view calibration_standard(ScorerMode mode) {
  switch (mode) {
    case ScorerMode::MisplacementCheck: return kMisplacementStandard;
    case ScorerMode::RetrievalRating: return kRetrievalStandard;
    case ScorerMode::ActivityRelevance: return kActivityStandard;
  }
  return kMisplacementStandard;
}

const ReceptacleEntry* ReceptacleDatabase::find(std::string_view id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), id,
                             [](const ReceptacleEntry& e, std::string_view key) { return e.id < key; });
  return (it != entries.end() && it->id == id) ? &*it : nullptr;
}

std::string describe_carriable(const SceneNode& carriable) {
  std::string text = "Category: " + carriable.instance.category + ".";
  if (const auto& a = carriable.carriable_affordance) {
    text += " Fine-grained category: " + a->fine_grained_category + ". Geometry & Functionality: " +
            a->geometry_functionality;
  }
  return text;
}

std::string describe_receptacle(const ReceptacleEntry& e) {
  std::string text = "Category: " + e.category + ".";
  auto add = [&text](const char* name, const std::string& value) {
    if (!value.empty()) text += std::string(" ") + name + ": " + value;
  };
  add("Fine-grained category", e.record.fine_grained_category);
  add("Geometry & Position", e.record.geometry_position);
  add("Relationship", e.record.relationship);
  add("Unique Usage", e.record.unique_usage);
  if (!e.room.empty()) text += " Located in the " + e.room + (e.area.empty() ? "." : " (area " + e.area + ").");
  return text;
}

ReceptacleEntry entry_for_node(const SceneNode& node, const SceneGraph& graph) {
  ReceptacleEntry e{node.id(), node.instance.category, {}, node.instance.room, area_of(graph, node.id())};
  if (node.affordance) {
    e.record = *node.affordance;
  } else if (node.carriable_affordance) {
    e.record.geometry_position = node.carriable_affordance->geometry_functionality;
    e.record.fine_grained_category = node.carriable_affordance->fine_grained_category;
  } else {
    e.record.fine_grained_category = node.instance.category;
  }
  return e;
}

ReceptacleEntry floor_entry(const std::string& room) {
  AffordanceRecord r{"The floor of the room.", "Not a receptacle; nothing is meant to be stored on it.",
                     "Objects left here are usually out of place.", "floor", AffordanceStage::Local};
  return {std::string(kFloorId), "floor", std::move(r), room, {}};
}

std::optional<NodeId> current_receptacle(const SceneGraph& graph, std::string_view carriable_id) {
  std::optional<NodeId> best;
  int best_rank = 3;
  for (const NodeId& id : graph.targets(carriable_id, Relation::On)) {
    const auto type = graph.at(id).instance.rtype;
    const int rank = type == RearrangementType::Receptacle ? 0 : type == RearrangementType::Other ? 1 : 2;
    if (rank < best_rank) {  // targets are sorted, so the first of a rank wins
      best_rank = rank;
      best = id;
    }
  }
  return best;
}

Scorer::Scorer(const affordance::LlmContext& ctx, TidyConfig config) : ctx_(ctx), config_(std::move(config)) {
  if (config_.k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1, got " + std::to_string(config_.k));
  if (config_.threshold < 0 || config_.threshold > 100) {
    throw Error(ErrorCode::InvalidInput, "threshold must be in [0, 100]");
  }
}

int Scorer::threads() const {
  return config_.calibration.kind == CalibrationVariant::Kind::SelfGenerated ? 1 : ctx_.threads;
}

std::string Scorer::calibration_block(ScorerMode mode, const std::string& carriable_key,
                                      const std::string& receptacle_key) {
  using K = CalibrationVariant::Kind;
  const auto kind = config_.calibration.kind;
  if (kind == K::NoCalibration) return {};

  std::vector<std::string> examples;
  if (kind == K::FixedExample) {
    examples.assign(kFixedExamples.begin(), kFixedExamples.end());
  } else if (kind == K::RandomExample) {
    auto rng = seeded_rng(config_.calibration.seed, carriable_key + "|" + receptacle_key);
    const auto first = uniform_index(rng, kExampleLibrary.size());
    auto second = uniform_index(rng, kExampleLibrary.size() - 1);
    if (second >= first) ++second;
    examples = {std::string(kExampleLibrary[first]), std::string(kExampleLibrary[second])};
  } else if (kind == K::SelfGenerated) {
    std::lock_guard lock(history_mutex_);
    const std::size_t have = std::min<std::size_t>(history_.size(), 2);
    examples.assign(history_.end() - static_cast<std::ptrdiff_t>(have), history_.end());
    for (std::size_t i = 0; examples.size() < 2; ++i) examples.emplace_back(kFixedExamples[i]);
  }

  std::string block = "Scoring standard:\n" + std::string(calibration_standard(mode)) + "\n";
  if (!examples.empty()) {
    block += "Scoring examples:\n";
    for (const auto& e : examples) block += "- " + e + "\n";
  }
  return block;
}

PlacementScore Scorer::run(llm::PromptRequest request, const std::string& carriable_id,
                           const std::string& receptacle_id) {
  auto fields = llm::complete_structured(ctx_.backend, request);
  auto value = llm::parse_leading_integer(fields.at("Score"));
  if (!value) {
    fields = llm::complete_structured(ctx_.backend, llm::with_format_reminder(request));
    value = llm::parse_leading_integer(fields.at("Score"));
  }
  const std::string subject = carriable_id + "/" + receptacle_id;
  if (!value) throw Error(ErrorCode::NonNumericScore, subject + ": Score '" + fields.at("Score") + "'");
  long score = *value;
  if (score < 0 || score > 100) {
    ctx_.warn("score", subject, "score " + std::to_string(score) + " clamped into [0, 100]");
    score = std::clamp(score, 0L, 100L);
  }
  return {carriable_id, receptacle_id, static_cast<int>(score), fields.at("Analysis")};
}

PlacementScore Scorer::score(const SceneNode& carriable, const ReceptacleEntry& receptacle, ScorerMode mode) {
  if (!carriable.carriable_affordance) {
    throw Error(ErrorCode::MissingAffordance, carriable.id() + " has no carriable affordance");
  }
  auto request = llm::render_prompt(
      llm::TemplateId::P5,
      {{"task", config_.task},
       {"calibration", calibration_block(mode, carriable.instance.category, receptacle.id)},
       {"carriable", carriable.id()},
       {"carriable_description", describe_carriable(carriable)},
       {"receptacle", receptacle.id},
       {"receptacle_description", describe_receptacle(receptacle)}},
      std::nullopt, ctx_.render);
  request.meta = {{"carriable", carriable.id()},
                  {"carriable_category", carriable.instance.category},
                  {"receptacle", receptacle.id},
                  {"receptacle_category", receptacle.category},
                  {"receptacle_fine_grained_category", receptacle.record.fine_grained_category}};
  PlacementScore out = run(std::move(request), carriable.id(), receptacle.id);
  if (config_.calibration.kind == CalibrationVariant::Kind::SelfGenerated) {
    std::lock_guard lock(history_mutex_);
    history_.push_back("Placing the " + carriable.instance.category + " on the " +
                       receptacle.record.fine_grained_category + " was scored " + std::to_string(out.score) + ".");
  }
  return out;
}

PlacementScore Scorer::score_activity(const std::string& activity, const ReceptacleEntry& entry) {
  auto request = llm::render_prompt(
      llm::TemplateId::P5,
      {{"task", std::string(kActivityTask)},
       {"calibration", calibration_block(ScorerMode::ActivityRelevance, activity, entry.id)},
       {"carriable", activity},
       {"carriable_description", "Human activity: " + activity},
       {"receptacle", entry.id},
       {"receptacle_description", describe_receptacle(entry)}},
      std::nullopt, ctx_.render);
  request.meta = {{"carriable", activity},
                  {"carriable_category", activity},
                  {"receptacle", entry.id},
                  {"receptacle_category", entry.category},
                  {"receptacle_fine_grained_category", entry.record.fine_grained_category}};
  return run(std::move(request), activity, entry.id);
}

std::vector<PlacementScore> detect_misplaced(const SceneGraph& aeg, Scorer& scorer) {
  require_enhanced(aeg);
  std::vector<const SceneNode*> carriables;
  for (const auto& node : aeg.nodes) {
    if (node.instance.rtype == RearrangementType::Carriable) carriables.push_back(&node);
  }
  std::vector<std::optional<PlacementScore>> scores(carriables.size());
  parallel_for(carriables.size(), scorer.threads(), [&](std::size_t i) {
    const SceneNode& c = *carriables[i];
    try {
      const auto current = current_receptacle(aeg, c.id());
      const ReceptacleEntry entry = current ? entry_for_node(aeg.at(*current), aeg) : floor_entry(c.instance.room);
      scores[i] = scorer.score(c, entry, ScorerMode::MisplacementCheck);
    } catch (const Error& e) {
      scorer.context().warn("detect", c.id(), std::string("skipped: ") + e.what());
    }
  });

  std::vector<PlacementScore> out;
  for (auto& s : scores) {
    if (s && s->score <= scorer.config().threshold) out.push_back(std::move(*s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score < b.score : a.carriable_id < b.carriable_id;
  });
  return out;
}

ReceptacleDatabase build_receptacle_db(const SceneGraph& aeg, bool allow_local_fallback) {
  require_enhanced(aeg);
  ReceptacleDatabase db;
  std::vector<std::string> missing;
  for (const auto& node : aeg.nodes) {
    if (node.instance.rtype != RearrangementType::Receptacle) continue;
    const bool usable = node.affordance && (node.affordance->stage == AffordanceStage::Updated || allow_local_fallback);
    if (!usable) {
      missing.push_back(node.id());
      continue;
    }
    db.entries.push_back(entry_for_node(node, aeg));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::MissingAffordance, list);
  }
  return db;
}

std::vector<std::pair<NodeId, int>> rate_all(const SceneNode& carriable, const ReceptacleDatabase& db, Scorer& scorer) {
  if (db.entries.empty()) throw Error(ErrorCode::Precondition, "receptacle database is empty");
  std::vector<std::optional<int>> scores(db.size());
  parallel_for(db.size(), scorer.threads(), [&](std::size_t i) {
    try {
      scores[i] = scorer.score(carriable, db.entries[i], ScorerMode::RetrievalRating).score;
    } catch (const Error& e) {
      scorer.context().warn("retrieve", carriable.id() + "/" + db.entries[i].id, e.what());
    }
  });
  std::vector<std::pair<NodeId, int>> ranked;
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (scores[i]) ranked.emplace_back(db.entries[i].id, *scores[i]);
  }
  const std::size_t failed = db.size() - ranked.size();
  if (2 * failed > db.size()) {
    throw Error(ErrorCode::RetrievalDegraded, carriable.id() + ": " + std::to_string(failed) + " of " +
                                                  std::to_string(db.size()) + " ratings failed");
  }
  sort_best_first(ranked);
  return ranked;
}

std::vector<std::pair<NodeId, int>> retrieve_candidates(const SceneNode& carriable, const ReceptacleDatabase& db,
                                                        int k, Scorer& scorer) {
  if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1, got " + std::to_string(k));
  auto ranked = rate_all(carriable, db, scorer);
  if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));
  return ranked;
}

PlacementDecision decide_placement(const SceneNode& carriable, const std::vector<std::pair<NodeId, int>>& candidates,
                                   const ReceptacleDatabase& db, Scorer& scorer) {
  if (candidates.empty()) throw Error(ErrorCode::Precondition, carriable.id() + ": no placement candidates");
  const auto& ctx = scorer.context();

  std::string listing;
  json meta_candidates = json::array();
  for (const auto& [id, score] : candidates) {
    const ReceptacleEntry* e = db.find(id);
    if (!e) throw Error(ErrorCode::Precondition, "candidate '" + id + "' is not in the receptacle database");
    listing += "- " + id + " (retrieval score " + std::to_string(score) + "): " + describe_receptacle(*e) + "\n";
    meta_candidates.push_back({{"id", id}, {"category", e->category}, {"fine_grained_category", e->record.fine_grained_category}});
  }
  auto request = llm::render_prompt(llm::TemplateId::P6,
                                    {{"task", scorer.config().task},
                                     {"carriable", carriable.id()},
                                     {"carriable_description", describe_carriable(carriable)},
                                     {"candidates", listing}},
                                    std::nullopt, ctx.render);
  request.meta = {{"carriable", carriable.id()},
                  {"carriable_category", carriable.instance.category},
                  {"candidates", std::move(meta_candidates)}};

  auto match = [&](const std::string& answer) -> std::optional<NodeId> {
    const std::string key = lower_trim(answer);
    for (const auto& [id, score] : candidates) {
      if (lower_trim(id) == key) return id;
    }
    for (const auto& [id, score] : candidates) {
      if (lower_trim(db.find(id)->record.fine_grained_category) == key) return id;
    }
    return std::nullopt;
  };

  PlacementDecision decision{carriable.id(), {}, {}, candidates, {}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const auto fields = llm::complete_structured(ctx.backend, attempt == 0 ? request : llm::with_format_reminder(request));
      if (auto chosen = match(fields.at("The best receptacle"))) {
        decision.chosen_receptacle_id = *chosen;
        decision.analysis = fields.at("Analysis");
        return decision;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseFailure) throw;
    }
  }
  ctx.warn("decide", carriable.id(), "answer matched no candidate; using the top-scored one");
  decision.chosen_receptacle_id = candidates.front().first;
  decision.analysis = "Fallback to the highest retrieval score.";
  return decision;
}

Plan plan_rearrangement(const SceneGraph& aeg, Scorer& scorer) {
  Plan plan;
  plan.misplaced = detect_misplaced(aeg, scorer);
  if (plan.misplaced.empty()) return plan;
  const ReceptacleDatabase db = build_receptacle_db(aeg, scorer.config().allow_local_fallback);
  for (const auto& item : plan.misplaced) {
    const SceneNode& carriable = aeg.at(item.carriable_id);
    try {
      auto ranked = rate_all(carriable, db, scorer);
      std::vector<std::pair<NodeId, int>> candidates(
          ranked.begin(), ranked.begin() + std::min<std::ptrdiff_t>(scorer.config().k, ranked.size()));
      auto decision = decide_placement(carriable, candidates, db, scorer);
      decision.ranked = std::move(ranked);
      plan.decisions.push_back(std::move(decision));
    } catch (const Error& e) {
      scorer.context().warn("plan", carriable.id(), std::string("skipped: ") + e.what());
    }
  }
  return plan;
}

std::map<NodeId, int> activity_heatmap(const SceneGraph& aeg, const std::string& activity, Scorer& scorer) {
  require_enhanced(aeg);
  std::vector<std::optional<int>> scores(aeg.nodes.size());
  parallel_for(aeg.nodes.size(), scorer.threads(), [&](std::size_t i) {
    const SceneNode& node = aeg.nodes[i];
    try {
      scores[i] = scorer.score_activity(activity, entry_for_node(node, aeg)).score;
    } catch (const Error& e) {
      scorer.context().warn("heatmap", node.id(), std::string("skipped: ") + e.what());
    }
  });
  std::map<NodeId, int> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) out[aeg.nodes[i].id()] = *scores[i];
  }
  return out;
}

std::size_t expected_plan_calls(std::size_t carriables, std::size_t misplaced, std::size_t db_size) {
  return carriables + misplaced * db_size + misplaced;
}

}  // namespace aeg::tidy
