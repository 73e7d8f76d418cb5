#include "skipopt/transforms.hpp"

#include <algorithm>

namespace skipopt {

RemoveResult remove_next_skip(const NetworkGraph& graph) {
    if (graph.skips.empty()) return {graph, std::nullopt};

    SkipEdge target = graph.skips.front(); // list is sorted input to output
    size_t sink_pos = *graph.layer_index(target.sink);
    LayerId trunk_pred = graph.layers[sink_pos - 1].id;

    NetworkGraph out;
    out.name = graph.name;
    out.layers.reserve(graph.layers.size() - 1);
    for (const auto& l : graph.layers)
        if (l.id != target.sink) out.layers.push_back(l);

    for (const auto& s : graph.skips) {
        if (s.id == target.id) continue;
        SkipEdge copy = s;
        if (copy.source == target.sink) copy.source = trunk_pred;
        out.skips.push_back(copy);
    }
    return {std::move(out), target.id};
}

ShortenResult shorten_next_skip(const NetworkGraph& graph) {
    const SkipEdge* candidate = nullptr;
    for (const auto& s : graph.skips) {
        if (s.span > 1) {
            candidate = &s;
            break;
        }
    }
    if (!candidate) return {graph, std::nullopt, {}, {}};

    SkipEdge target = *candidate;
    size_t src_pos = *graph.layer_index(target.source);
    size_t sink_pos = *graph.layer_index(target.sink);

    // Positions of the bypassed parametric layers; a fresh Add goes right
    // after each of them except the last, whose Add is the original sink.
    std::vector<size_t> param_pos;
    for (size_t i = src_pos + 1; i < sink_pos; ++i)
        if (graph.layers[i].parametric()) param_pos.push_back(i);

    LayerId next_layer = graph.next_layer_id();
    SkipId next_skip = graph.next_skip_id();

    ShortenResult result;
    result.split = target.id;

    NetworkGraph out;
    out.name = graph.name;

    std::vector<SkipEdge> replacements;
    LayerId segment_source = target.source;
    TensorShape segment_in = graph.layers[src_pos].out_shape;
    size_t next_cut = 0;

    for (size_t i = 0; i <= sink_pos; ++i) {
        out.layers.push_back(graph.layers[i]);
        bool cut_here = next_cut + 1 < param_pos.size() && i == param_pos[next_cut];
        bool is_sink = i == sink_pos;
        if (!cut_here && !is_sink) continue;

        LayerId add_id;
        TensorShape add_shape = graph.layers[i].out_shape;
        if (is_sink) {
            add_id = target.sink; // reuse the original terminal Add
        } else {
            LayerGroup add;
            add.id = next_layer++;
            add.op = LayerOp::Add;
            add.in_shape = add_shape;
            add.out_shape = add_shape;
            out.layers.push_back(add);
            result.created_adds.push_back(add.id);
            ++next_cut;
        }

        SkipEdge piece;
        piece.id = next_skip++;
        piece.source = segment_source;
        piece.sink = is_sink ? target.sink : result.created_adds.back();
        piece.span = 1;
        if (segment_in == add_shape) {
            piece.kind = SkipKind::Identity;
        } else {
            auto infer_stride = [](int in_dim, int out_dim) {
                return std::max(1, (in_dim + out_dim - 1) / out_dim);
            };
            piece.kind = SkipKind::Projection1x1;
            piece.proj_out_channels = add_shape.channels;
            piece.proj_stride = std::max(infer_stride(segment_in.height, add_shape.height),
                                         infer_stride(segment_in.width, add_shape.width));
        }
        replacements.push_back(piece);
        result.created_skips.push_back(piece.id);

        segment_source = piece.sink;
        segment_in = add_shape;
    }

    for (size_t i = sink_pos + 1; i < graph.layers.size(); ++i)
        out.layers.push_back(graph.layers[i]);

    // Splice the replacements where the original skip sat; sources ascend
    // along the trunk so the ordering invariant is preserved.
    for (const auto& s : graph.skips) {
        if (s.id == target.id) {
            for (const auto& piece : replacements) out.skips.push_back(piece);
        } else {
            out.skips.push_back(s);
        }
    }

    result.graph = std::move(out);
    return result;
}

NetworkGraph apply_all(const NetworkGraph& graph, AlterMode mode) {
    NetworkGraph current = graph;
    long budget =
        static_cast<long>(current.skips.size()) * std::max(1, current.max_skip_span()) + 1;
    for (long step = 0; step < budget; ++step) {
        if (mode == AlterMode::Remove) {
            auto r = remove_next_skip(current);
            if (!r.removed) return current;
            current = std::move(r.graph);
        } else {
            auto r = shorten_next_skip(current);
            if (!r.split) return current;
            current = std::move(r.graph);
        }
    }
    return current;
}

} // namespace skipopt
