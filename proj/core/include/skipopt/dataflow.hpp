#pragma once

#include <optional>
#include <vector>

#include "skipopt/graph.hpp"

namespace skipopt {

enum class HwVariant { Traditional, Removed, Shortened };

enum class StageKind {
    Clone,              // duplicates a stream so skip data can be read twice
    ConvBN,             // conv with folded BN (and any fused ReLU, in Removed)
    ReLU,
    AddReLU,            // terminal residual join, fused with a trailing ReLU
    FusedResidualStage, // span-1 skip living entirely inside one stage
};

struct DataflowStage {
    int id = 0;
    StageKind kind = StageKind::ConvBN;
    std::vector<LayerId> contents; // fused trunk layers, in order
    bool off_trunk = false;        // projection conv running beside the trunk
    std::optional<SkipId> projection_of;
    long long element_delay = 0;   // stream elements before the first output
    long long pre_add_delay = 0;   // delay of fused sublayers ahead of the Add
    long long conv_fill_delay = 0; // delay from parametric contents only
    long long cycles = 0;          // per-inference occupancy
};

enum class FifoBinding { BramFifo, ShiftRegister };

struct SkipFifo {
    int id = 0;
    SkipId skip = 0;
    int producer_stage = 0;
    int consumer_stage = 0;
    long long depth = 0;
    FifoBinding binding = FifoBinding::BramFifo;
};

/// One occurrence of the calibrated two-conv residual unit; filters keys the
/// resource fixture lookup.
struct BlockInfo {
    int filters = 0;
    bool recognized = false;
};

struct HwConfig {
    int total_bits = 16;
    int integer_bits = 6;
    int reuse_factor = 576;
    TensorShape image{32, 32, 3};
};

struct DataflowArch {
    HwVariant variant = HwVariant::Traditional;
    std::vector<DataflowStage> stages;
    std::vector<SkipFifo> fifos;
    std::vector<BlockInfo> blocks;
};

/// Stream-element delay contributed by one layer: a same-padded KxK conv must
/// buffer floor(K/2) rows plus floor(K/2) elements before producing its first
/// output; elementwise layers contribute one element.
long long element_delay(const LayerGroup& layer, int image_width);

/// Lowers the graph to the pipelined streaming architecture for `variant`.
/// Traditional spends a Clone stage per skip and a terminal AddReLU stage;
/// Removed (requires zero skips) fuses each conv with its activation;
/// Shortened (requires all spans 1) fuses every skip into one stage.
/// Depths and bindings are filled in (lower calls fifo_depths/bind_memories).
/// Throws std::invalid_argument on a variant/graph mismatch.
DataflowArch lower(const NetworkGraph& graph, HwVariant variant, const HwConfig& cfg);

/// Recomputes every skip buffer depth: a cross-stage FIFO holds the summed
/// delay of the spanned trunk stages plus a 2-element handshake margin; an
/// in-stage shift register holds the delay of the fused sublayers preceding
/// the add.
std::vector<long long> fifo_depths(const DataflowArch& arch, const HwConfig& cfg);

/// In-stage lifetimes map to shift registers, cross-stage FIFOs to BRAM.
void bind_memories(DataflowArch& arch);

const char* variant_name(HwVariant v);
const char* stage_kind_name(StageKind k);
const char* binding_name(FifoBinding b);

} // namespace skipopt
