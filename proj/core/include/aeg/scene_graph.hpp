#pragma once

#include "aeg/geometry.hpp"
#include "aeg/records.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aeg {

enum class RearrangementType { Carriable, Receptacle, Other };

std::string_view to_string(RearrangementType type);
RearrangementType parse_rearrangement_type(std::string_view text);

using FrameId = std::string;
using NodeId = std::string;

struct ObjectInstance {
  NodeId id;
  std::string category;
  std::string room;
  RearrangementType rtype = RearrangementType::Other;
  geometry::OrientedBox box;
  std::map<FrameId, std::int64_t> pixel_counts;
  std::optional<std::map<FrameId, geometry::Vec2>> pixel_centroids;

  bool operator==(const ObjectInstance&) const = default;
};

enum class Relation { Near, On, Support, Semantic };

std::string_view to_string(Relation relation);
Relation parse_relation(std::string_view text);

/// Directed edge. `label` is only meaningful (and required) for Semantic.
struct Edge {
  NodeId src;
  NodeId dst;
  Relation relation = Relation::Near;
  std::string label;

  auto operator<=>(const Edge&) const = default;
};

struct SceneNode {
  ObjectInstance instance;
  FrameId keyframe;
  std::optional<AffordanceRecord> affordance;
  std::optional<CarriableAffordance> carriable_affordance;

  const NodeId& id() const { return instance.id; }
  bool operator==(const SceneNode&) const = default;
};

struct Area {
  std::string id;
  std::string room;
  std::vector<NodeId> member_ids;  // sorted
  FrameId keyframe;
  std::optional<AreaProfile> profile;

  bool operator==(const Area&) const = default;
};

/// room label -> areas of that room, ordered by area id.
struct Hierarchy {
  std::map<std::string, std::vector<Area>> rooms;

  bool operator==(const Hierarchy&) const = default;
};

struct ImageSize {
  int width = 640;
  int height = 480;

  bool operator==(const ImageSize&) const = default;
};

/// Scene graph and, once enhanced, the affordance-enhanced graph.
///
/// Nodes are kept sorted by id and edges sorted and de-duplicated, so two
/// graphs built from the same content compare equal and serialize to the
/// same bytes.
struct SceneGraph {
  std::map<FrameId, std::string> frames;
  ImageSize image_size;
  std::vector<SceneNode> nodes;
  std::vector<Edge> edges;
  std::optional<Hierarchy> hierarchy;
  bool enhanced = false;

  const SceneNode* find(std::string_view id) const;
  SceneNode* find(std::string_view id);
  const SceneNode& at(std::string_view id) const;

  /// Targets of edges leaving `id` with the given relation, sorted.
  std::vector<NodeId> targets(std::string_view id, Relation relation) const;
  /// Near/On/Support neighbors (semantic edges excluded), sorted, unique.
  std::vector<NodeId> spatial_neighbors(std::string_view id) const;
  std::vector<NodeId> room_members(std::string_view room) const;
  std::vector<std::string> rooms() const;

  /// Sorts nodes and edges and removes duplicate (src, dst, relation) edges.
  void canonicalize();

  bool operator==(const SceneGraph&) const = default;
};

/// Throws Error{SchemaViolation} naming the first violated invariant.
void validate(const SceneGraph& graph);

struct RelationConfig {
  double xy_iou_threshold = 0.8;
  double support_gap = 0.2;
  double containment_threshold = 0.8;
  double near_threshold = 1.0;
  int containment_resolution = 16;

  void validate() const;
};

/// Spatial relations over every unordered pair. Per pair, at most one
/// category applies, checked in order: stacked (footprint overlap, no 3D
/// overlap, small vertical gap), then volume containment, then near.
std::vector<Edge> derive_relations(const std::vector<ObjectInstance>& instances,
                                   const RelationConfig& cfg = {});

struct KeyframeStrategy {
  enum class Kind { NeighborSum, Random, Centering, MaxSelf };
  Kind kind = Kind::NeighborSum;
  std::uint64_t seed = 0;

  static KeyframeStrategy parse(std::string_view text, std::uint64_t seed = 0);
};

std::string_view to_string(KeyframeStrategy::Kind kind);

/// Minimum pixel count for a frame to be eligible under Random/Centering.
inline constexpr std::int64_t kMinKeyframePixels = 100;

FrameId select_keyframe(const SceneNode& node, const SceneGraph& graph,
                        const KeyframeStrategy& strategy = {});

SceneGraph build_scene_graph(std::vector<ObjectInstance> instances,
                             std::map<FrameId, std::string> frames,
                             const RelationConfig& cfg = {},
                             const KeyframeStrategy& strategy = {},
                             ImageSize image_size = {});

}  // namespace aeg
