#include "skipopt/dataflow.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace skipopt {

const char* variant_name(HwVariant v) {
    switch (v) {
        case HwVariant::Traditional: return "traditional";
        case HwVariant::Removed: return "removed";
        case HwVariant::Shortened: return "shortened";
    }
    return "traditional";
}

const char* stage_kind_name(StageKind k) {
    switch (k) {
        case StageKind::Clone: return "clone";
        case StageKind::ConvBN: return "conv_bn";
        case StageKind::ReLU: return "relu";
        case StageKind::AddReLU: return "add_relu";
        case StageKind::FusedResidualStage: return "fused_residual";
    }
    return "conv_bn";
}

const char* binding_name(FifoBinding b) {
    return b == FifoBinding::BramFifo ? "bram_fifo" : "shift_register";
}

long long element_delay(const LayerGroup& layer, int image_width) {
    switch (layer.op) {
        case LayerOp::Conv: {
            long long half = layer.kernel / 2;
            return half * image_width + half;
        }
        case LayerOp::Dense:
        case LayerOp::ReLU:
        case LayerOp::Add:
            return 1;
        case LayerOp::BatchNormFolded:
        case LayerOp::Quantize:
            return 0; // folded into the producing stage
    }
    return 0;
}

namespace {

long long layer_delay(const NetworkGraph& g, LayerId id) {
    const LayerGroup* l = g.find_layer(id);
    return element_delay(*l, l->in_shape.width);
}

DataflowStage make_stage(int id, StageKind kind) {
    DataflowStage s;
    s.id = id;
    s.kind = kind;
    return s;
}

/// Delay/cycles per stage plus the pre-add offset used by shift registers.
void finalize(DataflowArch& arch, const NetworkGraph& graph, const HwConfig& cfg) {
    for (auto& s : arch.stages) {
        s.element_delay = 0;
        s.pre_add_delay = 0;
        s.conv_fill_delay = 0;
        bool before_add = true;
        bool compute = s.projection_of.has_value();
        long long elems = 0;
        for (LayerId id : s.contents) {
            const LayerGroup* l = graph.find_layer(id);
            long long d = element_delay(*l, l->in_shape.width);
            s.element_delay += d;
            if (l->op == LayerOp::Add) before_add = false;
            if (before_add) s.pre_add_delay += d;
            if (l->parametric()) {
                compute = true;
                s.conv_fill_delay += d;
            }
            elems = static_cast<long long>(l->out_shape.height) * l->out_shape.width;
        }
        if (s.kind == StageKind::Clone) s.element_delay = 1;
        if (s.projection_of) {
            const SkipEdge* skip = graph.find_skip(*s.projection_of);
            if (skip && s.kind != StageKind::FusedResidualStage) {
                const LayerGroup* sink = graph.find_layer(skip->sink);
                elems = static_cast<long long>(sink->out_shape.height) * sink->out_shape.width;
            }
        }
        s.cycles = compute ? elems * cfg.reuse_factor : elems;
    }
    auto depths = fifo_depths(arch, cfg);
    for (size_t i = 0; i < arch.fifos.size(); ++i) arch.fifos[i].depth = depths[i];
    bind_memories(arch);
}

/// The calibrated unit is conv3(f) -> ReLU -> conv3(f); anything else is kept
/// but flagged unrecognized so estimation can refuse it.
BlockInfo classify_span(const NetworkGraph& g, size_t begin, size_t end) {
    std::vector<const LayerGroup*> body;
    for (size_t i = begin; i < end; ++i) {
        const LayerGroup& l = g.layers[i];
        if (l.op == LayerOp::BatchNormFolded || l.op == LayerOp::Quantize) continue;
        body.push_back(&l);
    }
    BlockInfo info;
    if (body.size() == 3 && body[0]->op == LayerOp::Conv && body[1]->op == LayerOp::ReLU &&
        body[2]->op == LayerOp::Conv && body[0]->kernel == 3 && body[2]->kernel == 3 &&
        body[0]->out_channels == body[2]->out_channels) {
        info.recognized = true;
        info.filters = body[0]->out_channels;
    }
    return info;
}

DataflowArch lower_traditional(const NetworkGraph& graph) {
    DataflowArch arch;
    arch.variant = HwVariant::Traditional;

    std::map<LayerId, const SkipEdge*> skip_at_sink;
    std::map<LayerId, std::vector<const SkipEdge*>> skips_at_source;
    for (const auto& s : graph.skips) {
        skip_at_sink[s.sink] = &s;
        skips_at_source[s.source].push_back(&s);
    }

    std::map<SkipId, int> producer_stage, add_stage;
    int next_id = 0;

    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const LayerGroup& l = graph.layers[i];
        switch (l.op) {
            case LayerOp::Conv:
            case LayerOp::Dense: {
                DataflowStage st = make_stage(next_id++, StageKind::ConvBN);
                st.contents.push_back(l.id);
                while (i + 1 < graph.layers.size() &&
                       (graph.layers[i + 1].op == LayerOp::BatchNormFolded ||
                        graph.layers[i + 1].op == LayerOp::Quantize)) {
                    st.contents.push_back(graph.layers[++i].id);
                }
                arch.stages.push_back(std::move(st));
                break;
            }
            case LayerOp::ReLU: {
                DataflowStage st = make_stage(next_id++, StageKind::ReLU);
                st.contents.push_back(l.id);
                arch.stages.push_back(std::move(st));
                break;
            }
            case LayerOp::Add: {
                DataflowStage st = make_stage(next_id++, StageKind::AddReLU);
                st.contents.push_back(l.id);
                if (i + 1 < graph.layers.size() && graph.layers[i + 1].op == LayerOp::ReLU)
                    st.contents.push_back(graph.layers[++i].id);
                auto it = skip_at_sink.find(l.id);
                if (it != skip_at_sink.end()) add_stage[it->second->id] = st.id;
                arch.stages.push_back(std::move(st));
                break;
            }
            case LayerOp::BatchNormFolded:
            case LayerOp::Quantize: {
                // No preceding conv stage to fold into; keep a pass-through
                // stage so the trunk stays contiguous.
                DataflowStage st = make_stage(next_id++, StageKind::ConvBN);
                st.contents.push_back(l.id);
                arch.stages.push_back(std::move(st));
                break;
            }
        }

        auto src = skips_at_source.find(l.id);
        if (src != skips_at_source.end()) {
            for (const SkipEdge* s : src->second) {
                DataflowStage clone = make_stage(next_id++, StageKind::Clone);
                producer_stage[s->id] = clone.id;
                arch.stages.push_back(std::move(clone));
                if (s->kind == SkipKind::Projection1x1) {
                    DataflowStage proj = make_stage(next_id++, StageKind::ConvBN);
                    proj.off_trunk = true;
                    proj.projection_of = s->id;
                    producer_stage[s->id] = proj.id;
                    arch.stages.push_back(std::move(proj));
                }
            }
        }
    }

    for (const auto& s : graph.skips) {
        SkipFifo f;
        f.id = static_cast<int>(arch.fifos.size());
        f.skip = s.id;
        f.producer_stage = producer_stage.at(s.id);
        f.consumer_stage = add_stage.at(s.id);
        arch.fifos.push_back(f);

        size_t src_pos = *graph.layer_index(s.source);
        size_t sink_pos = *graph.layer_index(s.sink);
        arch.blocks.push_back(classify_span(graph, src_pos + 1, sink_pos));
    }
    return arch;
}

DataflowArch lower_removed(const NetworkGraph& graph) {
    DataflowArch arch;
    arch.variant = HwVariant::Removed;
    int next_id = 0;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const LayerGroup& l = graph.layers[i];
        DataflowStage st = make_stage(next_id++, StageKind::ConvBN);
        if (l.op == LayerOp::Conv || l.op == LayerOp::Dense) {
            st.contents.push_back(l.id);
            // "no more Clone, Add, or ReLU stages": activations fuse in.
            while (i + 1 < graph.layers.size() &&
                   (graph.layers[i + 1].op == LayerOp::ReLU ||
                    graph.layers[i + 1].op == LayerOp::BatchNormFolded ||
                    graph.layers[i + 1].op == LayerOp::Quantize)) {
                st.contents.push_back(graph.layers[++i].id);
            }
        } else {
            st.kind = StageKind::ReLU;
            st.contents.push_back(l.id);
        }
        arch.stages.push_back(std::move(st));
    }

    // Block structure for estimation: skip the stem conv, then pair the
    // remaining convs in trunk order.
    std::vector<const LayerGroup*> convs;
    for (const auto& l : graph.layers)
        if (l.op == LayerOp::Conv) convs.push_back(&l);
    for (size_t i = 1; i + 1 < convs.size(); i += 2) {
        BlockInfo info;
        if (convs[i]->kernel == 3 && convs[i + 1]->kernel == 3 &&
            convs[i]->out_channels == convs[i + 1]->out_channels) {
            info.recognized = true;
            info.filters = convs[i]->out_channels;
        }
        arch.blocks.push_back(info);
    }
    if (convs.size() >= 2 && (convs.size() - 1) % 2 != 0)
        arch.blocks.push_back(BlockInfo{}); // leftover conv: not a calibrated unit
    return arch;
}

DataflowArch lower_shortened(const NetworkGraph& graph) {
    DataflowArch arch;
    arch.variant = HwVariant::Shortened;

    // Wrapped regions (source, sink] per skip, keyed by first layer index.
    std::map<size_t, const SkipEdge*> region_start;
    for (const auto& s : graph.skips)
        region_start[*graph.layer_index(s.source) + 1] = &s;

    int next_id = 0;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        auto rs = region_start.find(i);
        if (rs != region_start.end()) {
            const SkipEdge& s = *rs->second;
            size_t sink_pos = *graph.layer_index(s.sink);
            DataflowStage st = make_stage(next_id++, StageKind::FusedResidualStage);
            if (s.kind == SkipKind::Projection1x1) st.projection_of = s.id;
            for (size_t j = i; j <= sink_pos; ++j) st.contents.push_back(graph.layers[j].id);
            i = sink_pos;
            if (i + 1 < graph.layers.size() && graph.layers[i + 1].op == LayerOp::ReLU &&
                region_start.find(i + 1) == region_start.end())
                st.contents.push_back(graph.layers[++i].id);
            arch.stages.push_back(std::move(st));

            SkipFifo f;
            f.id = static_cast<int>(arch.fifos.size());
            f.skip = s.id;
            f.producer_stage = arch.stages.back().id;
            f.consumer_stage = arch.stages.back().id;
            arch.fifos.push_back(f);
            continue;
        }
        const LayerGroup& l = graph.layers[i];
        DataflowStage st = make_stage(next_id++, StageKind::ConvBN);
        if (l.op == LayerOp::Conv || l.op == LayerOp::Dense) {
            st.contents.push_back(l.id);
            while (i + 1 < graph.layers.size() &&
                   region_start.find(i + 1) == region_start.end() &&
                   (graph.layers[i + 1].op == LayerOp::ReLU ||
                    graph.layers[i + 1].op == LayerOp::BatchNormFolded ||
                    graph.layers[i + 1].op == LayerOp::Quantize)) {
                st.contents.push_back(graph.layers[++i].id);
            }
        } else {
            st.kind = StageKind::ReLU;
            st.contents.push_back(l.id);
        }
        arch.stages.push_back(std::move(st));
    }

    // Consecutive fused pairs form the calibrated unit: [conv3(f) add] then
    // [relu conv3(f) add (relu)].
    std::vector<const DataflowStage*> fused;
    for (const auto& s : arch.stages)
        if (s.kind == StageKind::FusedResidualStage) fused.push_back(&s);
    for (size_t i = 0; i + 1 < fused.size(); i += 2) {
        BlockInfo info;
        const LayerGroup* c1 = nullptr;
        const LayerGroup* c2 = nullptr;
        int convs1 = 0, convs2 = 0;
        for (LayerId id : fused[i]->contents)
            if (graph.find_layer(id)->op == LayerOp::Conv) {
                c1 = graph.find_layer(id);
                ++convs1;
            }
        for (LayerId id : fused[i + 1]->contents)
            if (graph.find_layer(id)->op == LayerOp::Conv) {
                c2 = graph.find_layer(id);
                ++convs2;
            }
        if (c1 && c2 && convs1 == 1 && convs2 == 1 && c1->kernel == 3 &&
            c2->kernel == 3 && c1->out_channels == c2->out_channels &&
            !fused[i]->projection_of && !fused[i + 1]->projection_of) {
            info.recognized = true;
            info.filters = c1->out_channels;
        }
        arch.blocks.push_back(info);
    }
    if (fused.size() % 2 != 0) arch.blocks.push_back(BlockInfo{});
    return arch;
}

} // namespace

DataflowArch lower(const NetworkGraph& graph, HwVariant variant, const HwConfig& cfg) {
    if (graph.layers.empty()) throw std::invalid_argument("lower: empty graph");
    if (variant == HwVariant::Removed && !graph.skips.empty())
        throw std::invalid_argument("lower: Removed variant requires a graph with zero skips");
    if (variant == HwVariant::Shortened && graph.max_skip_span() > 1)
        throw std::invalid_argument("lower: Shortened variant requires all skip spans == 1");

    DataflowArch arch;
    switch (variant) {
        case HwVariant::Traditional: arch = lower_traditional(graph); break;
        case HwVariant::Removed: arch = lower_removed(graph); break;
        case HwVariant::Shortened: arch = lower_shortened(graph); break;
    }
    finalize(arch, graph, cfg);
    return arch;
}

std::vector<long long> fifo_depths(const DataflowArch& arch, const HwConfig&) {
    std::map<int, size_t> stage_pos;
    for (size_t i = 0; i < arch.stages.size(); ++i) stage_pos[arch.stages[i].id] = i;

    std::vector<long long> depths;
    depths.reserve(arch.fifos.size());
    for (const auto& f : arch.fifos) {
        if (f.producer_stage == f.consumer_stage) {
            // In-stage lifetime: the skip data waits through the fused
            // sublayers ahead of the residual join.
            depths.push_back(arch.stages[stage_pos.at(f.consumer_stage)].pre_add_delay);
            continue;
        }
        // Cross-stage FIFO: summed delay of the spanned trunk stages plus a
        // 2-element handshake margin.
        size_t lo = stage_pos.at(f.producer_stage);
        size_t hi = stage_pos.at(f.consumer_stage);
        long long depth = 2;
        for (size_t i = lo + 1; i < hi; ++i) {
            if (arch.stages[i].off_trunk) continue;
            depth += arch.stages[i].element_delay;
        }
        depths.push_back(depth);
    }
    return depths;
}

void bind_memories(DataflowArch& arch) {
    for (auto& f : arch.fifos) {
        f.binding = f.producer_stage == f.consumer_stage ? FifoBinding::ShiftRegister
                                                         : FifoBinding::BramFifo;
    }
}

} // namespace skipopt
