#include "aeg/io.hpp"

#include "aeg/error.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <system_error>

namespace aeg {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

void write_json_atomic(const fs::path& path, const Json& value) {
  write_text_atomic(path, dump_json(value));
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing required field '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> number_array(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != N) {
    schema_error(path, "expected an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

std::map<FrameId, std::string> frames_from_json(const Json& v, const std::string& path) {
  if (!v.is_object()) schema_error(path, "expected an object of frame id -> image path");
  std::map<FrameId, std::string> out;
  for (const auto& [id, file] : v.items()) {
    if (!file.is_string()) schema_error(path + "." + id, "expected an image path string");
    out.emplace(id, file.get<std::string>());
  }
  return out;
}

ImageSize image_size_from_json(const Json& root) {
  ImageSize size;
  if (auto it = root.find("image_size"); it != root.end()) {
    const auto dims = number_array<2>(*it, "image_size");
    size.width = static_cast<int>(dims[0]);
    size.height = static_cast<int>(dims[1]);
    if (size.width <= 0 || size.height <= 0) schema_error("image_size", "dimensions must be positive");
  }
  return size;
}

Json box_to_json(const geometry::OrientedBox& box) {
  const auto& c = box.center();
  const auto& h = box.half_extents();
  const auto r = box.rotation_row_major();
  return Json{{"center", {c.x(), c.y(), c.z()}},
              {"half_extents", {h.x(), h.y(), h.z()}},
              {"rotation", Json(std::vector<double>(r.begin(), r.end()))}};
}

geometry::OrientedBox box_from_json(const Json& v, const std::string& path) {
  const auto c = number_array<3>(require(v, "center", path), path + ".center");
  const auto h = number_array<3>(require(v, "half_extents", path), path + ".half_extents");
  const auto r = number_array<9>(require(v, "rotation", path), path + ".rotation");
  try {
    return geometry::OrientedBox::from_row_major({c[0], c[1], c[2]}, {h[0], h[1], h[2]}, r);
  } catch (const Error& e) {
    schema_error(path, e.what());
  }
}

const char* stage_name(AffordanceStage stage) {
  return stage == AffordanceStage::Updated ? "updated" : "local";
}

Json affordance_to_json(const AffordanceRecord& r) {
  return Json{{"geometry_position", r.geometry_position},
              {"relationship", r.relationship},
              {"unique_usage", r.unique_usage},
              {"fine_grained_category", r.fine_grained_category},
              {"stage", stage_name(r.stage)}};
}

AffordanceRecord affordance_from_json(const Json& v, const std::string& path) {
  AffordanceRecord r;
  r.geometry_position = require_string(v, "geometry_position", path);
  r.relationship = require_string(v, "relationship", path);
  r.unique_usage = require_string(v, "unique_usage", path);
  r.fine_grained_category = require_string(v, "fine_grained_category", path);
  const std::string stage = require_string(v, "stage", path);
  if (stage == "local") {
    r.stage = AffordanceStage::Local;
  } else if (stage == "updated") {
    r.stage = AffordanceStage::Updated;
  } else {
    schema_error(path + ".stage", "expected 'local' or 'updated'");
  }
  return r;
}

}  // namespace

Json instance_to_json(const ObjectInstance& inst) {
  Json j{{"id", inst.id},
         {"category", inst.category},
         {"room", inst.room},
         {"rtype", std::string(to_string(inst.rtype))},
         {"box", box_to_json(inst.box)},
         {"pixel_counts", Json::object()}};
  for (const auto& [frame, count] : inst.pixel_counts) j["pixel_counts"][frame] = count;
  if (inst.pixel_centroids) {
    Json centroids = Json::object();
    for (const auto& [frame, p] : *inst.pixel_centroids) centroids[frame] = {p.x(), p.y()};
    j["pixel_centroids"] = std::move(centroids);
  }
  return j;
}

ObjectInstance instance_from_json(const Json& v, const std::string& path) {
  if (!v.is_object()) schema_error(path, "expected an object");
  ObjectInstance inst;
  inst.id = require_string(v, "id", path);
  if (inst.id.empty()) schema_error(path + ".id", "must be non-empty");
  inst.category = require_string(v, "category", path);
  inst.room = require_string(v, "room", path);
  try {
    inst.rtype = parse_rearrangement_type(require_string(v, "rtype", path));
  } catch (const Error& e) {
    schema_error(path + ".rtype", e.what());
  }
  inst.box = box_from_json(require(v, "box", path), path + ".box");

  const Json& counts = require(v, "pixel_counts", path);
  if (!counts.is_object()) schema_error(path + ".pixel_counts", "expected an object");
  for (const auto& [frame, count] : counts.items()) {
    if (!count.is_number_integer() || count.get<std::int64_t>() < 0) {
      schema_error(path + ".pixel_counts." + frame, "expected a non-negative integer");
    }
    inst.pixel_counts.emplace(frame, count.get<std::int64_t>());
  }
  if (auto it = v.find("pixel_centroids"); it != v.end() && !it->is_null()) {
    if (!it->is_object()) schema_error(path + ".pixel_centroids", "expected an object");
    std::map<FrameId, geometry::Vec2> centroids;
    for (const auto& [frame, p] : it->items()) {
      const auto xy = number_array<2>(p, path + ".pixel_centroids." + frame);
      centroids.emplace(frame, geometry::Vec2(xy[0], xy[1]));
    }
    inst.pixel_centroids = std::move(centroids);
  }
  return inst;
}

SceneInput scene_input_from_json(const Json& root) {
  SceneInput input;
  input.frames = frames_from_json(require(root, "frames", "$"), "frames");
  input.image_size = image_size_from_json(root);
  const Json& instances = require(root, "instances", "$");
  if (!instances.is_array()) schema_error("instances", "expected an array");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    input.instances.push_back(instance_from_json(instances[i], "instances[" + std::to_string(i) + "]"));
  }
  return input;
}

SceneInput load_scene_input(const fs::path& path) { return scene_input_from_json(read_json(path)); }

Json graph_to_json(const SceneGraph& graph) {
  Json root;
  root["frames"] = Json::object();
  for (const auto& [id, file] : graph.frames) root["frames"][id] = file;
  root["image_size"] = {graph.image_size.width, graph.image_size.height};

  Json instances = Json::array();
  Json keyframes = Json::object();
  for (const SceneNode& node : graph.nodes) {
    Json inst = instance_to_json(node.instance);
    if (node.affordance) inst["affordance"] = affordance_to_json(*node.affordance);
    if (node.carriable_affordance) {
      inst["carriable_affordance"] = {
          {"geometry_functionality", node.carriable_affordance->geometry_functionality},
          {"fine_grained_category", node.carriable_affordance->fine_grained_category}};
    }
    instances.push_back(std::move(inst));
    keyframes[node.id()] = node.keyframe;
  }
  root["instances"] = std::move(instances);
  root["keyframes"] = std::move(keyframes);

  Json edges = Json::array();
  Json semantic = Json::array();
  for (const Edge& e : graph.edges) {
    if (e.relation == Relation::Semantic) {
      semantic.push_back({{"src", e.src}, {"dst", e.dst}, {"label", e.label}});
    } else {
      edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", std::string(to_string(e.relation))}});
    }
  }
  root["edges"] = std::move(edges);
  if (!semantic.empty() || graph.enhanced) root["semantic_edges"] = std::move(semantic);

  if (graph.hierarchy) {
    Json rooms = Json::object();
    for (const auto& [room, areas] : graph.hierarchy->rooms) {
      Json list = Json::array();
      for (const Area& area : areas) {
        Json a{{"id", area.id}, {"members", area.member_ids}, {"keyframe", area.keyframe}};
        if (area.profile) a["profile"] = {{"name", area.profile->name}, {"description", area.profile->description}};
        list.push_back(std::move(a));
      }
      rooms[room] = std::move(list);
    }
    root["hierarchy"] = std::move(rooms);
  }
  root["enhanced"] = graph.enhanced;
  return root;
}

SceneGraph graph_from_json(const Json& root) {
  if (!root.is_object()) schema_error("$", "expected an object");
  SceneGraph graph;
  graph.frames = frames_from_json(require(root, "frames", "$"), "frames");
  graph.image_size = image_size_from_json(root);

  const Json& instances = require(root, "instances", "$");
  if (!instances.is_array()) schema_error("instances", "expected an array");
  const Json* keyframes = nullptr;
  if (auto it = root.find("keyframes"); it != root.end()) {
    if (!it->is_object()) schema_error("keyframes", "expected an object");
    keyframes = &*it;
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string path = "instances[" + std::to_string(i) + "]";
    SceneNode node{instance_from_json(instances[i], path), {}, {}, {}};
    if (keyframes != nullptr) {
      if (auto kf = keyframes->find(node.id()); kf != keyframes->end()) {
        if (!kf->is_string()) schema_error("keyframes." + node.id(), "expected a frame id");
        node.keyframe = kf->get<std::string>();
        if (!node.keyframe.empty() && !graph.frames.contains(node.keyframe)) {
          schema_error("keyframes." + node.id(), "unknown frame '" + node.keyframe + "'");
        }
      }
    }
    if (auto it = instances[i].find("affordance"); it != instances[i].end()) {
      node.affordance = affordance_from_json(*it, path + ".affordance");
    }
    if (auto it = instances[i].find("carriable_affordance"); it != instances[i].end()) {
      node.carriable_affordance = CarriableAffordance{
          require_string(*it, "geometry_functionality", path + ".carriable_affordance"),
          require_string(*it, "fine_grained_category", path + ".carriable_affordance")};
    }
    graph.nodes.push_back(std::move(node));
  }

  auto read_edges = [&](const char* key, bool semantic) {
    auto it = root.find(key);
    if (it == root.end()) return;
    if (!it->is_array()) schema_error(key, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = std::string(key) + "[" + std::to_string(i) + "]";
      const Json& e = (*it)[i];
      Edge edge;
      edge.src = require_string(e, "src", path);
      edge.dst = require_string(e, "dst", path);
      if (semantic) {
        edge.relation = Relation::Semantic;
        edge.label = require_string(e, "label", path);
      } else {
        try {
          edge.relation = parse_relation(require_string(e, "kind", path));
        } catch (const Error& err) {
          schema_error(path + ".kind", err.what());
        }
        if (auto label = e.find("label"); label != e.end() && label->is_string()) {
          edge.label = label->get<std::string>();
        }
      }
      graph.edges.push_back(std::move(edge));
    }
  };
  read_edges("edges", false);
  read_edges("semantic_edges", true);

  if (auto it = root.find("hierarchy"); it != root.end() && !it->is_null()) {
    if (!it->is_object()) schema_error("hierarchy", "expected an object of room -> areas");
    Hierarchy hierarchy;
    for (const auto& [room, areas] : it->items()) {
      const std::string rpath = "hierarchy." + room;
      if (!areas.is_array()) schema_error(rpath, "expected an array of areas");
      auto& out = hierarchy.rooms[room];
      for (std::size_t i = 0; i < areas.size(); ++i) {
        const std::string apath = rpath + "[" + std::to_string(i) + "]";
        Area area;
        area.id = require_string(areas[i], "id", apath);
        area.room = room;
        area.keyframe = require_string(areas[i], "keyframe", apath);
        const Json& members = require(areas[i], "members", apath);
        if (!members.is_array() || members.empty()) schema_error(apath + ".members", "expected a non-empty array");
        for (const Json& m : members) {
          if (!m.is_string()) schema_error(apath + ".members", "expected node ids");
          area.member_ids.push_back(m.get<std::string>());
        }
        if (auto p = areas[i].find("profile"); p != areas[i].end()) {
          area.profile = AreaProfile{require_string(*p, "name", apath + ".profile"),
                                     require_string(*p, "description", apath + ".profile")};
        }
        out.push_back(std::move(area));
      }
    }
    graph.hierarchy = std::move(hierarchy);
  }
  if (auto it = root.find("enhanced"); it != root.end()) {
    if (!it->is_boolean()) schema_error("enhanced", "expected a boolean");
    graph.enhanced = it->get<bool>();
  }

  graph.canonicalize();
  validate(graph);
  if (graph.hierarchy) {
    for (const auto& [room, areas] : graph.hierarchy->rooms) {
      for (const Area& area : areas) {
        for (const NodeId& m : area.member_ids) {
          const SceneNode* node = graph.find(m);
          if (node == nullptr) schema_error("hierarchy." + room, "unknown member id '" + m + "'");
          if (node->instance.room != room) {
            schema_error("hierarchy." + room, "member '" + m + "' belongs to room '" + node->instance.room + "'");
          }
        }
      }
    }
  }
  return graph;
}

void save_graph(const SceneGraph& graph, const fs::path& path, const Json& config) {
  Json root = graph_to_json(graph);
  if (!config.is_null()) root["config"] = config;
  write_json_atomic(path, root);
}

SceneGraph load_graph(const fs::path& path) { return graph_from_json(read_json(path)); }

}  // namespace aeg
