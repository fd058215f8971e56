#pragma once

#include "aeg/affordance.hpp"
#include "aeg/scene_graph.hpp"
#include "aeg/tidy.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aeg::eval {

/// Ranked acceptable receptacles for a carriable, best first.
struct GroundTruthAnnotation {
  std::string carriable;  // node id, or category for pool items
  std::vector<NodeId> ranked_receptacles;

  /// Throws Error{SchemaViolation}: 1..5 entries, no duplicates.
  void validate() const;
  /// Also checks that every receptacle exists in `graph`.
  void validate(const SceneGraph& graph) const;
};

inline constexpr std::size_t kMaxGroundTruth = 5;

std::vector<GroundTruthAnnotation> annotations_from_json(const nlohmann::json& json);
std::vector<GroundTruthAnnotation> load_annotations(const std::filesystem::path& path);
nlohmann::json annotations_to_json(const std::vector<GroundTruthAnnotation>& annotations);

/// Relevance of the item at 1-based rank r in a list of length L is L - r + 1;
/// everything else has relevance 0. Predictions shorter than k are padded with
/// zero-relevance entries. Error{InvalidK} when k < 1.
double ndcg_at_k(const std::vector<NodeId>& predicted, const GroundTruthAnnotation& gt, int k);

struct DetectionOutcome {
  bool predicted_misplaced = false;
  bool actually_misplaced = false;
};

struct DetectionMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0, recall = 0, precision = 0, f1 = 0;
};

/// Positive class = misplaced. Undefined ratios are 0. Error{EmptyInput}.
DetectionMetrics detection_metrics(std::span<const DetectionOutcome> outcomes);

struct TruthRow {
  NodeId carriable_id;
  std::string category;
  NodeId receptacle_id;
  bool actually_misplaced = false;
};

struct MessyScene {
  SceneGraph graph;
  std::vector<TruthRow> truth;
  std::uint64_t seed = 0;
  std::size_t index = 0;
};

/// Half extent of generated carriable boxes.
inline constexpr double kMessyHalfExtent = 0.1;

/// Adds `n_place` carriables drawn uniformly from `pool` (annotations keyed by
/// category), each on a uniformly drawn receptacle of `base`. The stream is
/// seeded from (seed, index). The result is a plain scene graph: affordances
/// and semantic edges from `base` are dropped.
MessyScene generate_messy_scene(const SceneGraph& base, const std::vector<GroundTruthAnnotation>& pool, int n_place,
                                std::uint64_t seed, std::size_t index = 0);

nlohmann::json truth_to_json(const MessyScene& scene);

struct BenchmarkScene {
  std::string name;
  SceneGraph graph;
};

struct BenchmarkRow {
  std::string scene;
  NodeId carriable_id;
  std::string category;
  NodeId current_receptacle;
  bool actually_misplaced = false;
  bool predicted_misplaced = false;
  std::vector<NodeId> predicted;  // chosen receptacle first, then the ranking
  std::vector<double> ndcg;       // k = 1..8
};

struct BenchmarkReport {
  std::map<int, double> ndcg;  // k -> mean over rows
  DetectionMetrics detection;
  std::vector<BenchmarkRow> rows;
  std::vector<std::string> failures;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
};

inline constexpr int kReportMaxK = 8;

/// For every scene: enhance, detect, then retrieve and decide for every
/// annotated carriable (annotation matched by node id, then by category).
/// NDCG is averaged over all evaluated carriables of all scenes. A scene
/// that fails is recorded in `failures` and skipped. Error{EmptyInput} when
/// there are no scenes.
BenchmarkReport run_benchmark(const std::vector<BenchmarkScene>& scenes,
                              const std::vector<GroundTruthAnnotation>& annotations,
                              const affordance::LlmContext& ctx, const tidy::TidyConfig& tidy_config,
                              const affordance::EnhanceConfig& enhance_config = {}, std::uint64_t seed = 0);

nlohmann::json report_to_json(const BenchmarkReport& report);

}  // namespace aeg::eval
