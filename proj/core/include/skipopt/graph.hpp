#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skipopt/shape.hpp"

namespace skipopt {

using LayerId = int;
using SkipId = int;

enum class LayerOp {
    Conv,            // 2D conv, same padding, odd kernel; BN assumed folded in
    Dense,           // fully connected over the flattened input
    ReLU,
    Add,             // residual join; second operand comes from a skip edge
    BatchNormFolded, // no-op marker kept for provenance of folded BN
    Quantize,        // fixed-point fake-quantization of the activation stream
};

struct LayerGroup {
    LayerId id = 0;
    LayerOp op = LayerOp::ReLU;
    // Conv parameters
    int kernel = 0;
    int out_channels = 0;
    int stride = 1;
    // Dense parameters
    int out_features = 0;
    // Quantize parameters
    int total_bits = 0;
    int integer_bits = 0;

    TensorShape in_shape;
    TensorShape out_shape;

    bool parametric() const { return op == LayerOp::Conv || op == LayerOp::Dense; }
};

enum class SkipKind {
    Identity,
    Projection1x1, // 1x1 conv on the skip path reconciling channel/stride mismatch
};

/// One skip connection. `source` is the layer whose output enters the skip;
/// `sink` is the Add layer that consumes it. `span` counts the parametric
/// layer-groups the skip bypasses on the trunk.
struct SkipEdge {
    SkipId id = 0;
    LayerId source = 0;
    LayerId sink = 0;
    int span = 1;
    SkipKind kind = SkipKind::Identity;
    int proj_out_channels = 0;
    int proj_stride = 1;
};

/// Layer-group DAG: an ordered trunk chain plus forward skip edges.
/// Immutable by convention once built; passes return new graphs.
struct NetworkGraph {
    std::string name;
    std::vector<LayerGroup> layers; // trunk, dataflow order
    std::vector<SkipEdge> skips;    // sorted by source position (input to output)

    std::optional<size_t> layer_index(LayerId id) const;
    const LayerGroup* find_layer(LayerId id) const;
    const SkipEdge* find_skip(SkipId id) const;

    TensorShape input_shape() const;
    TensorShape output_shape() const;

    /// Trunk convs plus projection convs carried by skip edges.
    int conv_group_count() const;
    int projection_skip_count() const;
    int max_skip_span() const;

    LayerId next_layer_id() const;
    SkipId next_skip_id() const;
};

/// Output shape implied by a layer's parameters and its input shape.
/// Conv uses same padding: H' = ceil(H/stride).
TensorShape infer_output_shape(const LayerGroup& layer, const TensorShape& in);

/// Shape produced by a skip edge (identity passes the source shape through;
/// a projection applies its 1x1 conv parameters).
TensorShape skip_output_shape(const SkipEdge& skip, const TensorShape& source_out);

struct Violation {
    std::string where;   // offending node/edge, e.g. "layer 3" or "skip 1"
    std::string message;
};

/// Structural and shape checks. Empty result iff all invariants hold;
/// violations are data, not failures.
std::vector<Violation> validate(const NetworkGraph& graph);

} // namespace skipopt
