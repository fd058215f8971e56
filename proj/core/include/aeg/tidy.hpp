#pragma once

#include "aeg/affordance.hpp"
#include "aeg/scene_graph.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aeg::tidy {

enum class ScorerMode { MisplacementCheck, RetrievalRating, ActivityRelevance };

struct CalibrationVariant {
  enum class Kind { FixedStandard, FixedExample, RandomExample, SelfGenerated, NoCalibration };
  Kind kind = Kind::FixedStandard;
  std::uint64_t seed = 0;  // RandomExample only

  static CalibrationVariant parse(std::string_view text, std::uint64_t seed = 0);
};

std::string_view to_string(CalibrationVariant::Kind kind);

/// Scoring standard text for a mode (without examples).
std::string_view calibration_standard(ScorerMode mode);

inline constexpr std::string_view kDefaultTask = "tidy the house";
inline constexpr std::string_view kActivityTask = "find a suitable place for a human activity";
inline constexpr int kDefaultThreshold = 50;
inline constexpr int kDefaultK = 4;
inline constexpr int kMaxK = 8;
/// Id of the synthetic entry used for carriables with no On edge.
inline constexpr std::string_view kFloorId = "floor";

struct TidyConfig {
  std::string task{kDefaultTask};
  int k = kDefaultK;
  int threshold = kDefaultThreshold;
  CalibrationVariant calibration{};
  /// Use Local-stage records for receptacles whose update failed.
  bool allow_local_fallback = false;
};

struct PlacementScore {
  NodeId carriable_id;
  NodeId receptacle_id;
  int score = 0;
  std::string analysis;

  bool operator==(const PlacementScore&) const = default;
};

struct ReceptacleEntry {
  NodeId id;
  std::string category;
  AffordanceRecord record;
  std::string room;
  std::string area;  // empty when not in any area
};

/// Entries sorted by id.
struct ReceptacleDatabase {
  std::vector<ReceptacleEntry> entries;

  const ReceptacleEntry* find(std::string_view id) const;
  std::size_t size() const { return entries.size(); }
};

struct PlacementDecision {
  NodeId carriable_id;
  NodeId chosen_receptacle_id;
  std::string analysis;
  std::vector<std::pair<NodeId, int>> candidates;  // top-k, best first
  std::vector<std::pair<NodeId, int>> ranked;      // every db entry, best first
};

/// Text fed to the scorer as the carriable description.
std::string describe_carriable(const SceneNode& carriable);
/// Text fed to the scorer and decision prompts for a receptacle entry.
std::string describe_receptacle(const ReceptacleEntry& entry);

/// Scoring entry for any node, using whatever affordance it carries.
ReceptacleEntry entry_for_node(const SceneNode& node, const SceneGraph& graph);
ReceptacleEntry floor_entry(const std::string& room);

/// Current receptacle of a carriable: the target of its On edges, preferring
/// receptacles, then other objects, then carriables, then the lowest id.
std::optional<NodeId> current_receptacle(const SceneGraph& graph, std::string_view carriable_id);

/// Placement scorer. Holds the calibration state, which for SelfGenerated is
/// the sequence of earlier outcomes; that variant therefore scores one
/// request at a time.
class Scorer {
 public:
  Scorer(const affordance::LlmContext& ctx, TidyConfig config);

  const TidyConfig& config() const { return config_; }
  const affordance::LlmContext& context() const { return ctx_; }
  /// Worker count to use for batches of scores.
  int threads() const;

  /// Renders p5 for the mode, parses Score and clamps it into [0, 100] with a
  /// warning. A non-numeric score is re-requested once, then
  /// Error{NonNumericScore}.
  PlacementScore score(const SceneNode& carriable, const ReceptacleEntry& receptacle, ScorerMode mode);
  /// ActivityRelevance scoring of one node against an activity.
  PlacementScore score_activity(const std::string& activity, const ReceptacleEntry& entry);

  /// Calibration block (standard plus examples) for a pair.
  std::string calibration_block(ScorerMode mode, const std::string& carriable_key, const std::string& receptacle_key);

 private:
  PlacementScore run(llm::PromptRequest request, const std::string& carriable_id, const std::string& receptacle_id);

  const affordance::LlmContext& ctx_;
  TidyConfig config_;
  std::mutex history_mutex_;
  std::vector<std::string> history_;  // self-generated references
};

/// Carriables whose current placement scores at most `threshold`, ascending by
/// score then id. Throws Error{GraphNotEnhanced} on a plain scene graph.
std::vector<PlacementScore> detect_misplaced(const SceneGraph& aeg, Scorer& scorer);

/// Throws Error{MissingAffordance} listing receptacles without an updated
/// record (or without any record when local fallback is allowed).
ReceptacleDatabase build_receptacle_db(const SceneGraph& aeg, bool allow_local_fallback = false);

/// Every entry rated in RetrievalRating mode, best first (ties by id). Failed
/// ratings are dropped with a warning; more than half failing raises
/// Error{RetrievalDegraded}.
std::vector<std::pair<NodeId, int>> rate_all(const SceneNode& carriable, const ReceptacleDatabase& db, Scorer& scorer);

/// The first min(k, |db|) entries of rate_all. Error{InvalidK} when k < 1.
std::vector<std::pair<NodeId, int>> retrieve_candidates(const SceneNode& carriable, const ReceptacleDatabase& db,
                                                        int k, Scorer& scorer);

/// p6 over the candidates. The answer must name a candidate by id or
/// fine-grained category; after one retry the top-scored candidate is used
/// and a warning recorded.
PlacementDecision decide_placement(const SceneNode& carriable, const std::vector<std::pair<NodeId, int>>& candidates,
                                   const ReceptacleDatabase& db, Scorer& scorer);

struct Plan {
  std::vector<PlacementScore> misplaced;
  std::vector<PlacementDecision> decisions;  // detection order
};

Plan plan_rearrangement(const SceneGraph& aeg, Scorer& scorer);

/// Relevance of every node to a human activity, keyed by node id.
std::map<NodeId, int> activity_heatmap(const SceneGraph& aeg, const std::string& activity, Scorer& scorer);

/// Completions plan_rearrangement issues when nothing needs a retry.
std::size_t expected_plan_calls(std::size_t carriables, std::size_t misplaced, std::size_t db_size);

}  // namespace aeg::tidy
