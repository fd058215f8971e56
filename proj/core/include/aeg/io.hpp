#pragma once

#include "aeg/scene_graph.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace aeg {

using Json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a half-written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const Json& value);

/// Two-space indented dump with a trailing newline. Keys are sorted, so equal
/// values always produce identical bytes.
std::string dump_json(const Json& value);

/// Scene input file: `frames`, `instances`, optional `image_size`.
struct SceneInput {
  std::map<FrameId, std::string> frames;
  ImageSize image_size;
  std::vector<ObjectInstance> instances;
};

SceneInput scene_input_from_json(const Json& json);
SceneInput load_scene_input(const std::filesystem::path& path);

Json instance_to_json(const ObjectInstance& inst);
ObjectInstance instance_from_json(const Json& json, const std::string& path);

Json graph_to_json(const SceneGraph& graph);
/// Throws Error{SchemaViolation} with a field path (e.g.
/// `instances[2].box.rotation`) on malformed input; the result is validated.
SceneGraph graph_from_json(const Json& json);

/// `config`, when not null, is echoed under the top-level `config` key and
/// ignored on load.
void save_graph(const SceneGraph& graph, const std::filesystem::path& path, const Json& config = nullptr);
SceneGraph load_graph(const std::filesystem::path& path);

}  // namespace aeg
