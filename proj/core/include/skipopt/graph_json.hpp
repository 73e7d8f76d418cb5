#pragma once

#include <string>

#include <json.hpp>

#include "skipopt/graph.hpp"

namespace skipopt {

nlohmann::json graph_to_json(const NetworkGraph& graph);
NetworkGraph graph_from_json(const nlohmann::json& j);

/// File helpers. Throw std::runtime_error on I/O failure and
/// nlohmann::json::exception on malformed content.
void save_graph(const NetworkGraph& graph, const std::string& path);
NetworkGraph load_graph(const std::string& path);

std::string layer_op_name(LayerOp op);
LayerOp layer_op_from_name(const std::string& name);
std::string skip_kind_name(SkipKind kind);
SkipKind skip_kind_from_name(const std::string& name);

} // namespace skipopt
