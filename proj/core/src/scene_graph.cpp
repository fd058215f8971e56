#include "aeg/scene_graph.hpp"

#include "aeg/error.hpp"
#include "aeg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace aeg {

std::string_view to_string(RearrangementType type) {
  switch (type) {
    case RearrangementType::Carriable: return "carriable";
    case RearrangementType::Receptacle: return "receptacle";
    case RearrangementType::Other: return "other";
  }
  return "other";
}

RearrangementType parse_rearrangement_type(std::string_view text) {
  if (text == "carriable") return RearrangementType::Carriable;
  if (text == "receptacle") return RearrangementType::Receptacle;
  if (text == "other") return RearrangementType::Other;
  throw Error(ErrorCode::SchemaViolation, "unknown rtype '" + std::string(text) + "'");
}

std::string_view to_string(Relation relation) {
  switch (relation) {
    case Relation::Near: return "near";
    case Relation::On: return "on";
    case Relation::Support: return "support";
    case Relation::Semantic: return "semantic";
  }
  return "near";
}

Relation parse_relation(std::string_view text) {
  if (text == "near") return Relation::Near;
  if (text == "on") return Relation::On;
  if (text == "support") return Relation::Support;
  if (text == "semantic") return Relation::Semantic;
  throw Error(ErrorCode::SchemaViolation, "unknown edge kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// SceneGraph

const SceneNode* SceneGraph::find(std::string_view id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const SceneNode& n, std::string_view key) { return n.id() < key; });
  if (it != nodes.end() && it->id() == id) return &*it;
  // Fall back to a scan when callers appended nodes without canonicalizing.
  for (const SceneNode& n : nodes) {
    if (n.id() == id) return &n;
  }
  return nullptr;
}

SceneNode* SceneGraph::find(std::string_view id) {
  return const_cast<SceneNode*>(std::as_const(*this).find(id));
}

const SceneNode& SceneGraph::at(std::string_view id) const {
  const SceneNode* node = find(id);
  if (node == nullptr) throw Error(ErrorCode::InvalidInput, "unknown node id '" + std::string(id) + "'");
  return *node;
}

std::vector<NodeId> SceneGraph::targets(std::string_view id, Relation relation) const {
  std::vector<NodeId> out;
  for (const Edge& e : edges) {
    if (e.src == id && e.relation == relation) out.push_back(e.dst);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> SceneGraph::spatial_neighbors(std::string_view id) const {
  std::set<NodeId> out;
  for (const Edge& e : edges) {
    if (e.relation == Relation::Semantic) continue;
    if (e.src == id) out.insert(e.dst);
    if (e.dst == id) out.insert(e.src);
  }
  return {out.begin(), out.end()};
}

std::vector<NodeId> SceneGraph::room_members(std::string_view room) const {
  std::vector<NodeId> out;
  for (const SceneNode& n : nodes) {
    if (n.instance.room == room) out.push_back(n.id());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> SceneGraph::rooms() const {
  std::set<std::string> out;
  for (const SceneNode& n : nodes) out.insert(n.instance.room);
  return {out.begin(), out.end()};
}

void SceneGraph::canonicalize() {
  std::sort(nodes.begin(), nodes.end(),
            [](const SceneNode& a, const SceneNode& b) { return a.id() < b.id(); });
  std::sort(edges.begin(), edges.end());
  // Keep the first label for a repeated (src, dst, relation) triple.
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& a, const Edge& b) {
                            return a.src == b.src && a.dst == b.dst && a.relation == b.relation;
                          }),
              edges.end());
}

void validate(const SceneGraph& graph) {
  std::set<NodeId> ids;
  for (const SceneNode& n : graph.nodes) {
    if (n.id().empty()) throw Error(ErrorCode::SchemaViolation, "node with empty id");
    if (!ids.insert(n.id()).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate node id '" + n.id() + "'");
    }
    for (const auto& [frame, count] : n.instance.pixel_counts) {
      if (count < 0) {
        throw Error(ErrorCode::SchemaViolation, "node '" + n.id() + "': negative pixel count");
      }
      if (!graph.frames.contains(frame)) {
        throw Error(ErrorCode::SchemaViolation,
                    "node '" + n.id() + "': pixel_counts references unknown frame '" + frame + "'");
      }
    }
  }
  std::set<std::tuple<NodeId, NodeId, Relation>> seen;
  for (const Edge& e : graph.edges) {
    if (!ids.contains(e.src) || !ids.contains(e.dst)) {
      throw Error(ErrorCode::SchemaViolation,
                  "edge " + e.src + " -> " + e.dst + " references an unknown node id");
    }
    if (e.src == e.dst) throw Error(ErrorCode::SchemaViolation, "self edge on '" + e.src + "'");
    if (!seen.insert({e.src, e.dst, e.relation}).second) {
      throw Error(ErrorCode::SchemaViolation, "duplicate edge " + e.src + " -> " + e.dst);
    }
    if (e.relation == Relation::Semantic && e.label.empty()) {
      throw Error(ErrorCode::SchemaViolation, "semantic edge " + e.src + " -> " + e.dst + " has no label");
    }
  }
  for (const Edge& e : graph.edges) {
    if (e.relation != Relation::On && e.relation != Relation::Support) continue;
    const Relation mirror = e.relation == Relation::On ? Relation::Support : Relation::On;
    if (!seen.contains({e.dst, e.src, mirror})) {
      throw Error(ErrorCode::SchemaViolation,
                  "edge " + e.src + " -> " + e.dst + " has no mirrored on/support edge");
    }
  }
}

// ---------------------------------------------------------------------------
// Relations

void RelationConfig::validate() const {
  auto ratio_ok = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!ratio_ok(xy_iou_threshold) || !ratio_ok(containment_threshold)) {
    throw Error(ErrorCode::InvalidInput, "relation ratio thresholds must lie in (0, 1]");
  }
  if (!(support_gap > 0.0)) throw Error(ErrorCode::InvalidInput, "support_gap must be > 0");
  if (!(near_threshold >= 0.0)) throw Error(ErrorCode::InvalidInput, "near_threshold must be >= 0");
  if (containment_resolution < 4) {
    throw Error(ErrorCode::InvalidInput, "containment_resolution must be >= 4");
  }
}

namespace {

void push_support(std::vector<Edge>& edges, const NodeId& lower, const NodeId& upper) {
  edges.push_back({lower, upper, Relation::Support, {}});
  edges.push_back({upper, lower, Relation::On, {}});
}

}  // namespace

std::vector<Edge> derive_relations(const std::vector<ObjectInstance>& instances,
                                   const RelationConfig& cfg) {
  cfg.validate();
  if (instances.empty()) throw Error(ErrorCode::InvalidInput, "no instances");

  // Work on id order so the result does not depend on input order.
  std::vector<const ObjectInstance*> sorted;
  sorted.reserve(instances.size());
  for (const auto& inst : instances) sorted.push_back(&inst);
  std::sort(sorted.begin(), sorted.end(),
            [](const ObjectInstance* a, const ObjectInstance* b) { return a->id < b->id; });

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const ObjectInstance& a = *sorted[i];
      const ObjectInstance& b = *sorted[j];

      if (geometry::xy_iou(a.box, b.box) >= cfg.xy_iou_threshold &&
          !geometry::boxes_intersect_3d(a.box, b.box)) {
        const bool a_lower = a.box.center().z() <= b.box.center().z();
        const ObjectInstance& lower = a_lower ? a : b;
        const ObjectInstance& upper = a_lower ? b : a;
        const double gap = upper.box.min_z() - lower.box.max_z();
        if (gap < cfg.support_gap) {
          push_support(edges, lower.id, upper.id);
          continue;
        }
      }

      const double a_holds_b = geometry::containment_fraction(a.box, b.box, cfg.containment_resolution);
      const double b_holds_a = geometry::containment_fraction(b.box, a.box, cfg.containment_resolution);
      const bool a_contains = a_holds_b >= cfg.containment_threshold;
      const bool b_contains = b_holds_a >= cfg.containment_threshold;
      if (a_contains || b_contains) {
        bool a_is_container = a_contains;
        if (a_contains && b_contains) a_is_container = a.box.volume() >= b.box.volume();
        if (a_is_container) {
          push_support(edges, a.id, b.id);
        } else {
          push_support(edges, b.id, a.id);
        }
        continue;
      }

      if (geometry::closest_vertex_distance(a.box, b.box) < cfg.near_threshold) {
        edges.push_back({a.id, b.id, Relation::Near, {}});
        edges.push_back({b.id, a.id, Relation::Near, {}});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

// ---------------------------------------------------------------------------
// Keyframes

KeyframeStrategy KeyframeStrategy::parse(std::string_view text, std::uint64_t seed) {
  if (text == "neighbor_sum") return {Kind::NeighborSum, seed};
  if (text == "random") return {Kind::Random, seed};
  if (text == "centering") return {Kind::Centering, seed};
  if (text == "max_self") return {Kind::MaxSelf, seed};
  throw Error(ErrorCode::InvalidInput, "unknown keyframe strategy '" + std::string(text) + "'");
}

std::string_view to_string(KeyframeStrategy::Kind kind) {
  switch (kind) {
    case KeyframeStrategy::Kind::NeighborSum: return "neighbor_sum";
    case KeyframeStrategy::Kind::Random: return "random";
    case KeyframeStrategy::Kind::Centering: return "centering";
    case KeyframeStrategy::Kind::MaxSelf: return "max_self";
  }
  return "neighbor_sum";
}

namespace {

/// Frames where the node is visible at all, in frame-id order.
std::vector<FrameId> visible_frames(const ObjectInstance& inst) {
  std::vector<FrameId> out;
  for (const auto& [frame, count] : inst.pixel_counts) {
    if (count > 0) out.push_back(frame);
  }
  return out;
}

/// Frames with at least kMinKeyframePixels; falls back to every visible frame.
std::vector<FrameId> well_visible_frames(const ObjectInstance& inst) {
  std::vector<FrameId> out;
  for (const auto& [frame, count] : inst.pixel_counts) {
    if (count >= kMinKeyframePixels) out.push_back(frame);
  }
  if (out.empty()) out = visible_frames(inst);
  return out;
}

template <typename ScoreFn>
FrameId argmax_frame(const std::vector<FrameId>& frames, ScoreFn score) {
  // `frames` is sorted, so strict > keeps the lexicographically smallest tie.
  FrameId best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const FrameId& f : frames) {
    const double s = score(f);
    if (s > best_score) {
      best_score = s;
      best = f;
    }
  }
  return best;
}

std::int64_t count_in(const ObjectInstance& inst, const FrameId& frame) {
  auto it = inst.pixel_counts.find(frame);
  return it == inst.pixel_counts.end() ? 0 : it->second;
}

}  // namespace

FrameId select_keyframe(const SceneNode& node, const SceneGraph& graph,
                        const KeyframeStrategy& strategy) {
  const ObjectInstance& inst = node.instance;
  const std::vector<FrameId> visible = visible_frames(inst);
  if (visible.empty()) {
    throw Error(ErrorCode::NoVisibleFrame, "node '" + inst.id + "' is not visible in any frame");
  }

  switch (strategy.kind) {
    case KeyframeStrategy::Kind::NeighborSum: {
      std::vector<const ObjectInstance*> group{&inst};
      for (const NodeId& nb : graph.spatial_neighbors(inst.id)) {
        if (const SceneNode* n = graph.find(nb)) group.push_back(&n->instance);
      }
      return argmax_frame(visible, [&](const FrameId& f) {
        std::int64_t sum = 0;
        for (const ObjectInstance* member : group) sum += count_in(*member, f);
        return static_cast<double>(sum);
      });
    }
    case KeyframeStrategy::Kind::MaxSelf:
      return argmax_frame(visible, [&](const FrameId& f) { return static_cast<double>(count_in(inst, f)); });
    case KeyframeStrategy::Kind::Random: {
      const std::vector<FrameId> pool = well_visible_frames(inst);
      auto rng = seeded_rng(strategy.seed, inst.id);
      return pool[uniform_index(rng, pool.size())];
    }
    case KeyframeStrategy::Kind::Centering: {
      const std::vector<FrameId> pool = well_visible_frames(inst);
      if (!inst.pixel_centroids) {
        throw Error(ErrorCode::MissingCentroids, "node '" + inst.id + "' has no pixel_centroids");
      }
      const geometry::Vec2 center(graph.image_size.width / 2.0, graph.image_size.height / 2.0);
      return argmax_frame(pool, [&](const FrameId& f) {
        auto it = inst.pixel_centroids->find(f);
        if (it == inst.pixel_centroids->end()) {
          throw Error(ErrorCode::MissingCentroids,
                      "node '" + inst.id + "' has no centroid for frame '" + f + "'");
        }
        return -(it->second - center).norm();
      });
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown keyframe strategy");
}

SceneGraph build_scene_graph(std::vector<ObjectInstance> instances,
                             std::map<FrameId, std::string> frames, const RelationConfig& cfg,
                             const KeyframeStrategy& strategy, ImageSize image_size) {
  if (instances.empty()) throw Error(ErrorCode::InvalidInput, "scene has no instances");
  std::set<NodeId> ids;
  for (const ObjectInstance& inst : instances) {
    if (!ids.insert(inst.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate instance id '" + inst.id + "'");
    }
    for (const auto& [frame, count] : inst.pixel_counts) {
      if (!frames.contains(frame)) {
        throw Error(ErrorCode::InvalidInput,
                    "instance '" + inst.id + "' references unknown frame '" + frame + "'");
      }
      if (count < 0) throw Error(ErrorCode::InvalidInput, "instance '" + inst.id + "': negative pixel count");
    }
  }

  SceneGraph graph;
  graph.frames = std::move(frames);
  graph.image_size = image_size;
  graph.edges = derive_relations(instances, cfg);
  graph.nodes.reserve(instances.size());
  for (ObjectInstance& inst : instances) graph.nodes.push_back(SceneNode{std::move(inst), {}, {}, {}});
  graph.canonicalize();
  for (SceneNode& node : graph.nodes) node.keyframe = select_keyframe(node, graph, strategy);
  return graph;
}

}  // namespace aeg
