#include "skipopt/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace skipopt {

std::optional<size_t> NetworkGraph::layer_index(LayerId id) const {
    for (size_t i = 0; i < layers.size(); ++i)
        if (layers[i].id == id) return i;
    return std::nullopt;
}

const LayerGroup* NetworkGraph::find_layer(LayerId id) const {
    auto idx = layer_index(id);
    return idx ? &layers[*idx] : nullptr;
}

const SkipEdge* NetworkGraph::find_skip(SkipId id) const {
    for (const auto& s : skips)
        if (s.id == id) return &s;
    return nullptr;
}

TensorShape NetworkGraph::input_shape() const {
    return layers.empty() ? TensorShape{} : layers.front().in_shape;
}

TensorShape NetworkGraph::output_shape() const {
    return layers.empty() ? TensorShape{} : layers.back().out_shape;
}

int NetworkGraph::conv_group_count() const {
    int n = 0;
    for (const auto& l : layers)
        if (l.op == LayerOp::Conv) ++n;
    return n + projection_skip_count();
}

int NetworkGraph::projection_skip_count() const {
    int n = 0;
    for (const auto& s : skips)
        if (s.kind == SkipKind::Projection1x1) ++n;
    return n;
}

int NetworkGraph::max_skip_span() const {
    int m = 0;
    for (const auto& s : skips) m = std::max(m, s.span);
    return m;
}

LayerId NetworkGraph::next_layer_id() const {
    LayerId m = 0;
    for (const auto& l : layers) m = std::max(m, l.id);
    return m + 1;
}

SkipId NetworkGraph::next_skip_id() const {
    SkipId m = 0;
    for (const auto& s : skips) m = std::max(m, s.id);
    return m + 1;
}

static int ceil_div(int a, int b) { return (a + b - 1) / b; }

TensorShape infer_output_shape(const LayerGroup& layer, const TensorShape& in) {
    switch (layer.op) {
        case LayerOp::Conv:
            return {ceil_div(in.height, layer.stride), ceil_div(in.width, layer.stride),
                    layer.out_channels};
        case LayerOp::Dense:
            return {1, 1, layer.out_features};
        case LayerOp::ReLU:
        case LayerOp::Add:
        case LayerOp::BatchNormFolded:
        case LayerOp::Quantize:
            return in;
    }
    return in;
}

TensorShape skip_output_shape(const SkipEdge& skip, const TensorShape& source_out) {
    if (skip.kind == SkipKind::Identity) return source_out;
    return {ceil_div(source_out.height, skip.proj_stride),
            ceil_div(source_out.width, skip.proj_stride), skip.proj_out_channels};
}

namespace {

std::string layer_tag(const LayerGroup& l) {
    std::ostringstream os;
    os << "layer " << l.id;
    return os.str();
}

std::string skip_tag(const SkipEdge& s) {
    std::ostringstream os;
    os << "skip " << s.id;
    return os.str();
}

} // namespace

std::vector<Violation> validate(const NetworkGraph& graph) {
    std::vector<Violation> out;
    auto flag = [&out](std::string where, std::string message) {
        out.push_back({std::move(where), std::move(message)});
    };

    if (graph.layers.empty()) {
        flag("graph", "graph has no layers (no source/sink)");
        return out;
    }

    std::set<LayerId> layer_ids;
    for (const auto& l : graph.layers) {
        if (!layer_ids.insert(l.id).second)
            flag(layer_tag(l), "duplicate layer id");
        if (!l.in_shape.valid() || !l.out_shape.valid())
            flag(layer_tag(l), "shape dimensions must be >= 1");
        if (l.op == LayerOp::Conv) {
            if (l.kernel < 1 || l.kernel % 2 == 0)
                flag(layer_tag(l), "conv kernel must be odd and positive");
            if (l.out_channels < 1) flag(layer_tag(l), "conv out_channels must be >= 1");
            if (l.stride < 1) flag(layer_tag(l), "conv stride must be >= 1");
        }
        if (l.op == LayerOp::Dense && l.out_features < 1)
            flag(layer_tag(l), "dense out_features must be >= 1");
        if (infer_output_shape(l, l.in_shape) != l.out_shape)
            flag(layer_tag(l), "output shape inconsistent with kind and input shape");
    }

    // Trunk chain: each layer consumes its predecessor's output.
    for (size_t i = 1; i < graph.layers.size(); ++i) {
        if (graph.layers[i].in_shape != graph.layers[i - 1].out_shape)
            flag(layer_tag(graph.layers[i]), "input shape does not match previous layer's output");
    }

    // Every Add must join the trunk with exactly one skip (two predecessors).
    std::set<SkipId> skip_ids;
    std::vector<int> incoming_skips(graph.layers.size(), 0);
    size_t prev_pos = 0;
    bool order_ok = true;
    for (size_t si = 0; si < graph.skips.size(); ++si) {
        const auto& s = graph.skips[si];
        if (!skip_ids.insert(s.id).second) flag(skip_tag(s), "duplicate skip id");
        if (s.span < 1) flag(skip_tag(s), "span must be >= 1");

        auto src = graph.layer_index(s.source);
        auto snk = graph.layer_index(s.sink);
        if (!src || !snk) {
            flag(skip_tag(s), "source or sink does not name a layer");
            continue;
        }
        if (*src >= *snk)
            flag(skip_tag(s), "source must strictly precede sink in topological order");
        if (graph.layers[*snk].op != LayerOp::Add)
            flag(skip_tag(s), "sink is not an Add layer");
        else
            incoming_skips[*snk]++;

        if (si > 0 && *src < prev_pos) order_ok = false;
        prev_pos = *src;

        // Bypassed parametric groups must agree with the declared span.
        int parametric = 0;
        for (size_t i = *src + 1; i < *snk; ++i)
            if (graph.layers[i].parametric()) ++parametric;
        if (parametric != s.span)
            flag(skip_tag(s), "span does not match the bypassed parametric layer-groups");

        TensorShape delivered = skip_output_shape(s, graph.layers[*src].out_shape);
        if (delivered != graph.layers[*snk].out_shape) {
            flag(skip_tag(s), s.kind == SkipKind::Identity
                                  ? "identity skip across mismatched shapes"
                                  : "projection output does not match sink shape");
        }
        if (s.kind == SkipKind::Projection1x1 &&
            (s.proj_out_channels < 1 || s.proj_stride < 1))
            flag(skip_tag(s), "projection parameters must be >= 1");
    }
    if (!order_ok)
        flag("skips", "skip list is not sorted by source position");

    for (size_t i = 0; i < graph.layers.size(); ++i) {
        if (graph.layers[i].op == LayerOp::Add) {
            if (i == 0)
                flag(layer_tag(graph.layers[i]), "Add cannot be the first layer");
            if (incoming_skips[i] == 0)
                flag(layer_tag(graph.layers[i]), "Add has one predecessor (no incoming skip)");
            else if (incoming_skips[i] > 1)
                flag(layer_tag(graph.layers[i]), "Add has more than two predecessors");
        }
    }

    return out;
}

} // namespace skipopt
