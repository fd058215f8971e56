#pragma once

#include "aeg/llm/backend.hpp"
#include "aeg/llm/prompts.hpp"
#include "aeg/scene_graph.hpp"
#include "aeg/warnings.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aeg::affordance {

/// Everything the LLM-facing stages share.
struct LlmContext {
  llm::Backend& backend;
  llm::RenderOptions render{};
  /// Directory holding the frame images named in `SceneGraph::frames`. When
  /// unset, prompts are sent without images.
  std::optional<std::filesystem::path> frames_dir{};
  int threads = 1;
  WarningLog* warnings = nullptr;

  void warn(std::string stage, std::string subject, std::string message) const;
  /// Image for a frame, or nullopt when no frames directory is configured.
  std::optional<std::filesystem::path> image(const SceneGraph& graph, const FrameId& frame) const;
};

struct RoomContext {
  struct Block {
    std::string area_id;
    AreaProfile profile;
    std::vector<NodeId> member_ids;
    std::vector<std::string> member_categories;
  };

  std::string room;
  std::vector<Block> blocks;  // area-id order

  std::string text() const;
};

struct SemanticLink {
  NodeId dst;
  std::string label;

  bool operator==(const SemanticLink&) const = default;
};

/// Maximum number of words kept in a semantic edge label.
inline constexpr std::size_t kMaxLabelWords = 10;
/// Maximum number of words kept in a fine-grained category.
inline constexpr std::size_t kMaxCategoryWords = 8;

/// Neighborhood sentence fed to the local and global prompts. Relation
/// sentences with no members are left out.
std::string describe_node_context(const SceneNode& node, const SceneGraph& graph);

/// The four fields of a record, one per line, as shown to later prompts.
std::string format_record(const AffordanceRecord& record);

AffordanceRecord analyze_local(const SceneNode& node, const SceneGraph& graph, const LlmContext& ctx);
CarriableAffordance analyze_carriable(const SceneNode& node, const SceneGraph& graph, const LlmContext& ctx);
AreaProfile analyze_area(const Area& area, const SceneGraph& graph, const LlmContext& ctx);

/// Throws Error{MissingProfile} naming the first area without a profile.
RoomContext aggregate_room_context(const std::string& room, const std::vector<Area>& areas,
                                   const SceneGraph& graph);

/// Related-object names are resolved within the node's room: first an exact
/// case-insensitive id match, then a category match (lowest id wins). Names
/// that resolve to nothing, or to the node itself, are dropped with a warning.
std::vector<SemanticLink> discover_semantic_edges(const SceneNode& node, const SceneGraph& graph,
                                                  const RoomContext& context, const AffordanceRecord& local,
                                                  const LlmContext& ctx);

AffordanceRecord update_affordance(const SceneNode& node, const SceneGraph& graph, const RoomContext& context,
                                   const std::vector<SemanticLink>& links, const AffordanceRecord& local,
                                   const LlmContext& ctx);

struct EnhanceConfig {
  /// Abort on the first node failure instead of recording it and moving on.
  bool fail_fast = false;
};

/// Full enhancement. Any previous enhancement of `graph` is discarded first,
/// so enhancing twice gives the same result. Throws Error{Precondition} when
/// the graph has no hierarchy.
SceneGraph enhance(SceneGraph graph, const LlmContext& ctx, const EnhanceConfig& config = {});

/// Number of completions `enhance` issues when nothing needs a retry.
std::size_t expected_enhance_calls(const SceneGraph& graph);

}  // namespace aeg::affordance
