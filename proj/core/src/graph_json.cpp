#include "skipopt/graph_json.hpp"

#include <fstream>
#include <stdexcept>

namespace skipopt {

using nlohmann::json;

std::string layer_op_name(LayerOp op) {
    switch (op) {
        case LayerOp::Conv: return "conv";
        case LayerOp::Dense: return "dense";
        case LayerOp::ReLU: return "relu";
        case LayerOp::Add: return "add";
        case LayerOp::BatchNormFolded: return "batchnorm_folded";
        case LayerOp::Quantize: return "quantize";
    }
    return "relu";
}

LayerOp layer_op_from_name(const std::string& name) {
    if (name == "conv") return LayerOp::Conv;
    if (name == "dense") return LayerOp::Dense;
    if (name == "relu") return LayerOp::ReLU;
    if (name == "add") return LayerOp::Add;
    if (name == "batchnorm_folded") return LayerOp::BatchNormFolded;
    if (name == "quantize") return LayerOp::Quantize;
    throw std::runtime_error("unknown layer kind: " + name);
}

std::string skip_kind_name(SkipKind kind) {
    return kind == SkipKind::Identity ? "identity" : "projection1x1";
}

SkipKind skip_kind_from_name(const std::string& name) {
    if (name == "identity") return SkipKind::Identity;
    if (name == "projection1x1") return SkipKind::Projection1x1;
    throw std::runtime_error("unknown skip kind: " + name);
}

static json shape_to_json(const TensorShape& s) {
    return json::array({s.height, s.width, s.channels});
}

static TensorShape shape_from_json(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

json graph_to_json(const NetworkGraph& graph) {
    json j;
    j["name"] = graph.name;
    j["layers"] = json::array();
    for (const auto& l : graph.layers) {
        json params = json::object();
        if (l.op == LayerOp::Conv) {
            params["kernel"] = l.kernel;
            params["out_channels"] = l.out_channels;
            params["stride"] = l.stride;
        } else if (l.op == LayerOp::Dense) {
            params["out_features"] = l.out_features;
        } else if (l.op == LayerOp::Quantize) {
            params["total_bits"] = l.total_bits;
            params["integer_bits"] = l.integer_bits;
        }
        j["layers"].push_back({{"id", l.id},
                               {"kind", layer_op_name(l.op)},
                               {"params", params},
                               {"in_shape", shape_to_json(l.in_shape)},
                               {"out_shape", shape_to_json(l.out_shape)}});
    }
    j["skips"] = json::array();
    for (const auto& s : graph.skips) {
        json e = {{"id", s.id},
                  {"source", s.source},
                  {"sink", s.sink},
                  {"span", s.span},
                  {"kind", skip_kind_name(s.kind)}};
        if (s.kind == SkipKind::Projection1x1) {
            e["params"] = {{"out_channels", s.proj_out_channels},
                           {"stride", s.proj_stride}};
        }
        j["skips"].push_back(e);
    }
    return j;
}

NetworkGraph graph_from_json(const json& j) {
    NetworkGraph g;
    g.name = j.at("name").get<std::string>();
    for (const auto& jl : j.at("layers")) {
        LayerGroup l;
        l.id = jl.at("id").get<LayerId>();
        l.op = layer_op_from_name(jl.at("kind").get<std::string>());
        const json& params = jl.at("params");
        if (l.op == LayerOp::Conv) {
            l.kernel = params.at("kernel").get<int>();
            l.out_channels = params.at("out_channels").get<int>();
            l.stride = params.at("stride").get<int>();
        } else if (l.op == LayerOp::Dense) {
            l.out_features = params.at("out_features").get<int>();
        } else if (l.op == LayerOp::Quantize) {
            l.total_bits = params.at("total_bits").get<int>();
            l.integer_bits = params.at("integer_bits").get<int>();
        }
        l.in_shape = shape_from_json(jl.at("in_shape"));
        l.out_shape = shape_from_json(jl.at("out_shape"));
        g.layers.push_back(l);
    }
    for (const auto& js : j.at("skips")) {
        SkipEdge s;
        s.id = js.at("id").get<SkipId>();
        s.source = js.at("source").get<LayerId>();
        s.sink = js.at("sink").get<LayerId>();
        s.span = js.at("span").get<int>();
        s.kind = skip_kind_from_name(js.at("kind").get<std::string>());
        if (s.kind == SkipKind::Projection1x1) {
            s.proj_out_channels = js.at("params").at("out_channels").get<int>();
            s.proj_stride = js.at("params").at("stride").get<int>();
        }
        g.skips.push_back(s);
    }
    return g;
}

void save_graph(const NetworkGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << graph_to_json(graph).dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

NetworkGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    json j = json::parse(in);
    return graph_from_json(j);
}

} // namespace skipopt
