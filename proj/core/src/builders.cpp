#include "skipopt/builders.hpp"

#include <stdexcept>
#include <string>

namespace skipopt {

namespace {

/// Incremental trunk/skip assembly with automatic shape propagation.
class GraphAssembler {
public:
    explicit GraphAssembler(std::string name, TensorShape input)
        : input_(input) {
        graph_.name = std::move(name);
    }

    LayerId conv(int kernel, int out_channels, int stride = 1) {
        LayerGroup l;
        l.op = LayerOp::Conv;
        l.kernel = kernel;
        l.out_channels = out_channels;
        l.stride = stride;
        return push(l);
    }

    LayerId dense(int out_features) {
        LayerGroup l;
        l.op = LayerOp::Dense;
        l.out_features = out_features;
        return push(l);
    }

    LayerId relu() {
        LayerGroup l;
        l.op = LayerOp::ReLU;
        return push(l);
    }

    LayerId add() {
        LayerGroup l;
        l.op = LayerOp::Add;
        return push(l);
    }

    SkipId identity_skip(LayerId source, LayerId sink, int span) {
        SkipEdge s;
        s.id = next_skip_++;
        s.source = source;
        s.sink = sink;
        s.span = span;
        s.kind = SkipKind::Identity;
        graph_.skips.push_back(s);
        return s.id;
    }

    SkipId projection_skip(LayerId source, LayerId sink, int span,
                           int out_channels, int stride) {
        SkipEdge s;
        s.id = next_skip_++;
        s.source = source;
        s.sink = sink;
        s.span = span;
        s.kind = SkipKind::Projection1x1;
        s.proj_out_channels = out_channels;
        s.proj_stride = stride;
        graph_.skips.push_back(s);
        return s.id;
    }

    LayerId last() const { return graph_.layers.back().id; }
    NetworkGraph take() { return std::move(graph_); }

private:
    LayerId push(LayerGroup l) {
        l.id = next_layer_++;
        l.in_shape = graph_.layers.empty() ? input_ : graph_.layers.back().out_shape;
        l.out_shape = infer_output_shape(l, l.in_shape);
        graph_.layers.push_back(l);
        return l.id;
    }

    NetworkGraph graph_;
    TensorShape input_;
    LayerId next_layer_ = 0;
    SkipId next_skip_ = 0;
};

// Basic block: conv3(f) -> ReLU -> conv3(f) -> Add -> ReLU. The skip bypasses
// both convs (span 2); stage-boundary blocks scale the shortcut with a 1x1
// projection at the block stride.
void append_basic_block(GraphAssembler& g, int filters, int stride) {
    LayerId source = g.last();
    g.conv(3, filters, stride);
    g.relu();
    g.conv(3, filters, 1);
    LayerId sink = g.add();
    if (stride != 1) {
        g.projection_skip(source, sink, 2, filters, stride);
    } else {
        g.identity_skip(source, sink, 2);
    }
    g.relu();
}

// Bottleneck block: conv1(f) -> ReLU -> conv3(f, stride) -> ReLU -> conv1(4f)
// -> Add -> ReLU, skip spanning the three convs.
void append_bottleneck_block(GraphAssembler& g, int filters, int stride,
                             bool project) {
    LayerId source = g.last();
    g.conv(1, filters, 1);
    g.relu();
    g.conv(3, filters, stride);
    g.relu();
    g.conv(1, 4 * filters, 1);
    LayerId sink = g.add();
    if (project) {
        g.projection_skip(source, sink, 3, 4 * filters, stride);
    } else {
        g.identity_skip(source, sink, 3);
    }
    g.relu();
}

} // namespace

NetworkGraph build_resnet_basic(int depth, int base_filters, TensorShape input) {
    if (depth < 8 || (depth - 2) % 6 != 0)
        throw std::invalid_argument(
            "resnet-basic depth must be 6k+2 with k >= 1 (e.g. 20, 32, 44, 56, 110); got " +
            std::to_string(depth));
    if (base_filters < 1) throw std::invalid_argument("base_filters must be >= 1");
    if (!input.valid()) throw std::invalid_argument("input shape dimensions must be >= 1");

    int blocks_per_stage = (depth - 2) / 6;
    GraphAssembler g("resnet" + std::to_string(depth), input);
    g.conv(3, base_filters, 1);
    g.relu();
    for (int stage = 0; stage < 3; ++stage) {
        int filters = base_filters << stage;
        for (int b = 0; b < blocks_per_stage; ++b) {
            int stride = (stage > 0 && b == 0) ? 2 : 1;
            append_basic_block(g, filters, stride);
        }
    }
    return g.take();
}

NetworkGraph build_resnet_bottleneck(TensorShape input) {
    if (!input.valid()) throw std::invalid_argument("input shape dimensions must be >= 1");

    static constexpr int kStageBlocks[4] = {3, 4, 6, 3};
    static constexpr int kStageFilters[4] = {64, 128, 256, 512};

    GraphAssembler g("resnet50", input);
    g.conv(7, 64, 2);
    g.relu();
    // No pooling layer is modeled, so every stage (including the first)
    // downsamples in its leading block.
    for (int stage = 0; stage < 4; ++stage) {
        for (int b = 0; b < kStageBlocks[stage]; ++b) {
            int stride = (b == 0) ? 2 : 1;
            append_bottleneck_block(g, kStageFilters[stage], stride, b == 0);
        }
    }
    return g.take();
}

NetworkGraph build_quartznet(int n_blocks, int span, TensorShape input,
                             int kernel, int channels) {
    if (n_blocks < 1) throw std::invalid_argument("n_blocks must be >= 1");
    if (span < 1) throw std::invalid_argument("span must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("kernel must be odd and positive");
    if (!input.valid()) throw std::invalid_argument("input shape dimensions must be >= 1");

    GraphAssembler g("quartznet" + std::to_string(n_blocks) + "x" + std::to_string(span),
                     input);
    g.conv(kernel, channels, 1);
    g.relu();
    for (int b = 0; b < n_blocks; ++b) {
        LayerId source = g.last();
        for (int s = 0; s < span; ++s) {
            g.conv(kernel, channels, 1);
            if (s + 1 < span) g.relu();
        }
        LayerId sink = g.add();
        g.identity_skip(source, sink, span);
        g.relu();
    }
    return g.take();
}

NetworkGraph build_residual_mlp(int n_blocks, int hidden, int classes,
                                int in_features) {
    if (n_blocks < 1 || hidden < 1 || classes < 2 || in_features < 1)
        throw std::invalid_argument("residual-mlp parameters must be positive (classes >= 2)");

    GraphAssembler g("residual_mlp" + std::to_string(n_blocks), {1, 1, in_features});
    g.dense(hidden);
    g.relu();
    for (int b = 0; b < n_blocks; ++b) {
        LayerId source = g.last();
        g.dense(hidden);
        g.relu();
        g.dense(hidden);
        LayerId sink = g.add();
        g.identity_skip(source, sink, 2);
        g.relu();
    }
    g.dense(classes);
    return g.take();
}

NetworkGraph build_basic_block(int filters, int kernel, TensorShape input) {
    if (filters < 1) throw std::invalid_argument("filters must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("kernel must be odd and positive");

    // Unit 1x1 stem gives the skip a producing layer without adding any
    // stream delay (a 1x1 conv needs no spatial context).
    GraphAssembler g("basic_block" + std::to_string(filters), input);
    g.conv(1, filters, 1);
    LayerId source = g.last();
    g.conv(kernel, filters, 1);
    g.relu();
    g.conv(kernel, filters, 1);
    LayerId sink = g.add();
    g.identity_skip(source, sink, 2);
    g.relu();
    return g.take();
}

} // namespace skipopt
