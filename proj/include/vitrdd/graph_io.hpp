#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "vitrdd/graph.hpp"

namespace vitrdd {

nlohmann::json graph_to_json(const ModelGraph& graph);
/// Strict schema: unknown or missing fields raise ValidationError naming the node id and field.
ModelGraph graph_from_json(const nlohmann::json& j);

ModelGraph load_graph(const std::filesystem::path& path);
void save_graph(const ModelGraph& graph, const std::filesystem::path& path);

}  // namespace vitrdd
