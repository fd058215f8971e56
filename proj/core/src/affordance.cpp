#include "aeg/affordance.hpp"

#include "aeg/error.hpp"
#include "aeg/llm/parse.hpp"
#include "aeg/parallel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace aeg::affordance {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string first_words(const std::string& text, std::size_t max_words) {
  std::istringstream in(text);
  std::string word, out;
  for (std::size_t n = 0; n < max_words && in >> word; ++n) out += (n ? " " : "") + word;
  return out;
}

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string required_field(const llm::StructuredFields& fields, std::string_view name) {
  std::string value = trim(fields.at(name));
  if (value.empty()) throw Error(ErrorCode::ParseFailure, "field '" + std::string(name) + "' is empty");
  return value;
}

/// Runs fn, prefixing any library error with the subject id.
template <class Fn>
auto for_subject(const std::string& subject, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), subject + ": " + e.what());
  }
}

std::string fine_grained_of(const SceneNode& node) {
  if (node.affordance) return node.affordance->fine_grained_category;
  if (node.carriable_affordance) return node.carriable_affordance->fine_grained_category;
  return node.instance.category;
}

AffordanceRecord record_from(const llm::StructuredFields& fields, AffordanceStage stage, const std::string& subject,
                             const LlmContext& ctx) {
  AffordanceRecord r;
  r.geometry_position = required_field(fields, "Geometry & Position");
  r.relationship = required_field(fields, "Relationship");
  r.unique_usage = required_field(fields, "Unique Usage");
  r.fine_grained_category = required_field(fields, "Fine-Grained Category");
  if (word_count(r.fine_grained_category) > kMaxCategoryWords) {
    ctx.warn("fine_grained_category", subject, "truncated to " + std::to_string(kMaxCategoryWords) + " words");
    r.fine_grained_category = first_words(r.fine_grained_category, kMaxCategoryWords);
  }
  r.stage = stage;
  return r;
}

json record_json(const AffordanceRecord& r) {
  return {{"geometry_position", r.geometry_position},
          {"relationship", r.relationship},
          {"unique_usage", r.unique_usage},
          {"fine_grained_category", r.fine_grained_category}};
}

void require_context_node(const SceneNode& node) {
  if (node.instance.rtype == RearrangementType::Carriable) {
    throw Error(ErrorCode::Precondition, node.id() + " is carriable; expected a receptacle or other object");
  }
}

}  // namespace

void LlmContext::warn(std::string stage, std::string subject, std::string message) const {
  if (warnings) warnings->add(std::move(stage), std::move(subject), std::move(message));
}

std::optional<std::filesystem::path> LlmContext::image(const SceneGraph& graph, const FrameId& frame) const {
  if (!frames_dir) return std::nullopt;
  auto it = graph.frames.find(frame);
  if (it == graph.frames.end()) throw Error(ErrorCode::Precondition, "unknown frame '" + frame + "'");
  return *frames_dir / it->second;
}

std::string RoomContext::text() const {
  std::string out;
  for (const Block& b : blocks) {
    std::vector<std::string> members;
    for (std::size_t i = 0; i < b.member_ids.size(); ++i) {
      members.push_back(b.member_ids[i] + " (" + b.member_categories[i] + ")");
    }
    out += "Area " + b.area_id + " \"" + b.profile.name + "\": " + b.profile.description + "\n";
    out += "  Objects: " + join(members, ", ") + "\n";
  }
  return out;
}

std::string describe_node_context(const SceneNode& node, const SceneGraph& graph) {
  const auto& inst = node.instance;
  const char* noun = inst.rtype == RearrangementType::Receptacle ? "receptacle" : "object";
  std::string text = std::string("The name of this ") + noun + " is " + inst.id + ", its category is " +
                     inst.category + ", it is located in the room " + inst.room;

  std::vector<std::string> parts;
  if (auto near = graph.targets(inst.id, Relation::Near); !near.empty()) {
    parts.push_back("it is near these objects: " + join(near, ", "));
  }
  if (auto supports = graph.targets(inst.id, Relation::Support); !supports.empty()) {
    parts.push_back("it supports these objects: " + join(supports, ", "));
  }
  if (auto supporters = graph.targets(inst.id, Relation::On); !supporters.empty()) {
    parts.push_back("it is supported by these objects: " + join(supporters, ", "));
  }
  if (!parts.empty()) text += ", its relationships with surrounding objects are: " + join(parts, ", ");
  return text + ".";
}

std::string format_record(const AffordanceRecord& r) {
  return "Geometry & Position: " + r.geometry_position + "\nRelationship: " + r.relationship +
         "\nUnique Usage: " + r.unique_usage + "\nFine-Grained Category: " + r.fine_grained_category;
}

AffordanceRecord analyze_local(const SceneNode& node, const SceneGraph& graph, const LlmContext& ctx) {
  require_context_node(node);
  return for_subject(node.id(), [&] {
    auto request = llm::render_prompt(llm::TemplateId::P1, {{"description", describe_node_context(node, graph)}},
                                      ctx.image(graph, node.keyframe), ctx.render);
    request.meta = {{"id", node.id()}, {"category", node.instance.category}, {"room", node.instance.room}};
    return record_from(llm::complete_structured(ctx.backend, request), AffordanceStage::Local, node.id(), ctx);
  });
}

CarriableAffordance analyze_carriable(const SceneNode& node, const SceneGraph& graph, const LlmContext& ctx) {
  if (node.instance.rtype != RearrangementType::Carriable) {
    throw Error(ErrorCode::Precondition, node.id() + " is not carriable");
  }
  return for_subject(node.id(), [&] {
    auto request = llm::render_prompt(llm::TemplateId::Carriable, {{"category", node.instance.category}},
                                      ctx.image(graph, node.keyframe), ctx.render);
    request.meta = {{"id", node.id()}, {"category", node.instance.category}};
    const auto fields = llm::complete_structured(ctx.backend, request);
    CarriableAffordance out{required_field(fields, "Geometry & Functionality"),
                            required_field(fields, "Fine-Grained Category")};
    if (word_count(out.fine_grained_category) > kMaxCategoryWords) {
      ctx.warn("fine_grained_category", node.id(), "truncated to " + std::to_string(kMaxCategoryWords) + " words");
      out.fine_grained_category = first_words(out.fine_grained_category, kMaxCategoryWords);
    }
    return out;
  });
}

AreaProfile analyze_area(const Area& area, const SceneGraph& graph, const LlmContext& ctx) {
  if (area.member_ids.empty()) throw Error(ErrorCode::Precondition, area.id + ": area has no members");
  return for_subject(area.id, [&] {
    std::string objects;
    json members = json::array();
    for (const NodeId& id : area.member_ids) {
      const SceneNode& m = graph.at(id);
      const std::string fine = fine_grained_of(m);
      objects += "- " + id + ": " + m.instance.category + " (fine-grained: " + fine + ")\n";
      members.push_back({{"id", id}, {"category", m.instance.category}, {"fine_grained_category", fine}});
    }
    auto request = llm::render_prompt(llm::TemplateId::P2, {{"room", area.room}, {"objects", objects}},
                                      ctx.image(graph, area.keyframe), ctx.render);
    request.meta = {{"room", area.room}, {"members", std::move(members)}};
    const auto fields = llm::complete_structured(ctx.backend, request);
    return AreaProfile{required_field(fields, "Name"), required_field(fields, "Description")};
  });
}

RoomContext aggregate_room_context(const std::string& room, const std::vector<Area>& areas, const SceneGraph& graph) {
  RoomContext context{room, {}};
  for (const Area& area : areas) {
    if (!area.profile) throw Error(ErrorCode::MissingProfile, area.id);
    RoomContext::Block block{area.id, *area.profile, area.member_ids, {}};
    for (const NodeId& id : area.member_ids) block.member_categories.push_back(graph.at(id).instance.category);
    context.blocks.push_back(std::move(block));
  }
  std::sort(context.blocks.begin(), context.blocks.end(),
            [](const auto& a, const auto& b) { return a.area_id < b.area_id; });
  return context;
}

std::vector<SemanticLink> discover_semantic_edges(const SceneNode& node, const SceneGraph& graph,
                                                  const RoomContext& context, const AffordanceRecord& local,
                                                  const LlmContext& ctx) {
  require_context_node(node);
  return for_subject(node.id(), [&] {
    json members = json::array();
    for (const auto& block : context.blocks) {
      for (std::size_t i = 0; i < block.member_ids.size(); ++i) {
        members.push_back({{"id", block.member_ids[i]}, {"category", block.member_categories[i]}});
      }
    }
    auto request = llm::render_prompt(llm::TemplateId::P3,
                                      {{"description", describe_node_context(node, graph)},
                                       {"local_analysis", format_record(local)},
                                       {"room_context", context.text()}},
                                      ctx.image(graph, node.keyframe), ctx.render);
    request.meta = {{"id", node.id()},
                    {"category", node.instance.category},
                    {"room", node.instance.room},
                    {"room_members", std::move(members)}};
    const auto fields = llm::complete_structured(ctx.backend, request);
    const auto& names = fields.list("objects that have functional relationships");
    const auto& labels = fields.list("additional functional edge");

    const std::vector<NodeId> room_ids = graph.room_members(node.instance.room);
    auto resolve = [&](const std::string& raw) -> std::optional<NodeId> {
      std::string name = llm::normalize_name(raw);
      while (!name.empty() && (name.back() == '.' || name.back() == ',')) name.pop_back();
      for (const NodeId& id : room_ids) {
        if (llm::normalize_name(id) == name) return id;
      }
      for (const NodeId& id : room_ids) {
        if (llm::normalize_name(graph.at(id).instance.category) == name) return id;
      }
      return std::nullopt;
    };

    std::vector<SemanticLink> links;
    std::set<NodeId> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto dst = resolve(names[i]);
      if (!dst) {
        ctx.warn("semantic_edges", node.id(), "dropped unknown object '" + names[i] + "'");
        continue;
      }
      if (*dst == node.id()) {
        ctx.warn("semantic_edges", node.id(), "dropped self reference '" + names[i] + "'");
        continue;
      }
      if (!seen.insert(*dst).second) continue;
      std::string label = i < labels.size() ? trim(labels[i]) : std::string();
      if (label.empty()) label = "functionally related";
      if (word_count(label) > kMaxLabelWords) label = first_words(label, kMaxLabelWords);
      links.push_back({*dst, std::move(label)});
    }
    return links;
  });
}

AffordanceRecord update_affordance(const SceneNode& node, const SceneGraph& graph, const RoomContext& context,
                                   const std::vector<SemanticLink>& links, const AffordanceRecord& local,
                                   const LlmContext& ctx) {
  require_context_node(node);
  if (local.stage != AffordanceStage::Local) {
    throw Error(ErrorCode::Precondition, node.id() + ": update expects a local record");
  }
  return for_subject(node.id(), [&] {
    std::string edges;
    for (const auto& l : links) edges += "- " + node.id() + " -> " + l.dst + ": " + l.label + "\n";
    if (edges.empty()) edges = "None";
    auto request = llm::render_prompt(llm::TemplateId::P4,
                                      {{"description", describe_node_context(node, graph)},
                                       {"local_analysis", format_record(local)},
                                       {"room_context", context.text()},
                                       {"semantic_edges", edges}},
                                      ctx.image(graph, node.keyframe), ctx.render);
    request.meta = {{"id", node.id()},
                    {"category", node.instance.category},
                    {"room", node.instance.room},
                    {"local", record_json(local)}};
    return record_from(llm::complete_structured(ctx.backend, request), AffordanceStage::Updated, node.id(), ctx);
  });
}

SceneGraph enhance(SceneGraph graph, const LlmContext& ctx, const EnhanceConfig& config) {
  if (!graph.hierarchy) throw Error(ErrorCode::Precondition, "graph has no hierarchy; run cluster first");

  // Start from the plain scene graph.
  for (auto& node : graph.nodes) {
    node.affordance.reset();
    node.carriable_affordance.reset();
  }
  std::erase_if(graph.edges, [](const Edge& e) { return e.relation == Relation::Semantic; });
  for (auto& [room, areas] : graph.hierarchy->rooms) {
    for (auto& area : areas) area.profile.reset();
  }
  graph.enhanced = false;

  auto on_failure = [&](const char* stage, const std::string& subject, const Error& e) {
    if (config.fail_fast) throw e;
    ctx.warn(stage, subject, std::string("skipped: ") + e.what());
  };

  // Local analysis of every node.
  const std::size_t n = graph.nodes.size();
  std::vector<std::optional<AffordanceRecord>> locals(n);
  std::vector<std::optional<CarriableAffordance>> carriables(n);
  parallel_for(n, ctx.threads, [&](std::size_t i) {
    const SceneNode& node = graph.nodes[i];
    try {
      if (node.instance.rtype == RearrangementType::Carriable) {
        carriables[i] = analyze_carriable(node, graph, ctx);
      } else {
        locals[i] = analyze_local(node, graph, ctx);
      }
    } catch (const Error& e) {
      on_failure("local", node.id(), e);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    graph.nodes[i].affordance = locals[i];
    graph.nodes[i].carriable_affordance = carriables[i];
  }

  // Per room: areas, room context, then semantic edges and updates.
  std::vector<Edge> semantic;
  for (auto& [room, areas] : graph.hierarchy->rooms) {
    std::vector<std::optional<AreaProfile>> profiles(areas.size());
    parallel_for(areas.size(), ctx.threads, [&](std::size_t a) {
      try {
        profiles[a] = analyze_area(areas[a], graph, ctx);
      } catch (const Error& e) {
        on_failure("area", areas[a].id, e);
      }
    });
    for (std::size_t a = 0; a < areas.size(); ++a) areas[a].profile = profiles[a];

    RoomContext context;
    try {
      context = aggregate_room_context(room, areas, graph);
    } catch (const Error& e) {
      on_failure("room", room, e);
      continue;
    }

    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < n; ++i) {
      const SceneNode& node = graph.nodes[i];
      if (node.instance.room == room && node.instance.rtype != RearrangementType::Carriable && node.affordance) {
        targets.push_back(i);
      }
    }
    std::vector<std::vector<SemanticLink>> links(targets.size());
    std::vector<std::optional<AffordanceRecord>> updated(targets.size());
    parallel_for(targets.size(), ctx.threads, [&](std::size_t t) {
      const SceneNode& node = graph.nodes[targets[t]];
      try {
        auto found = discover_semantic_edges(node, graph, context, *node.affordance, ctx);
        updated[t] = update_affordance(node, graph, context, found, *node.affordance, ctx);
        links[t] = std::move(found);
      } catch (const Error& e) {
        on_failure("global", node.id(), e);
      }
    });
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (!updated[t]) continue;
      SceneNode& node = graph.nodes[targets[t]];
      node.affordance = updated[t];
      for (auto& l : links[t]) semantic.push_back({node.id(), l.dst, Relation::Semantic, l.label});
    }
  }

  graph.edges.insert(graph.edges.end(), semantic.begin(), semantic.end());
  graph.canonicalize();
  graph.enhanced = true;
  validate(graph);
  return graph;
}

std::size_t expected_enhance_calls(const SceneGraph& graph) {
  std::size_t calls = 0;
  for (const auto& node : graph.nodes) calls += node.instance.rtype == RearrangementType::Carriable ? 1 : 3;
  if (graph.hierarchy) {
    for (const auto& [room, areas] : graph.hierarchy->rooms) calls += areas.size();
  }
  return calls;
}

}  // namespace aeg::affordance
