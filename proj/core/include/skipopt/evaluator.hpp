#pragma once

#include <map>
#include <memory>
#include <optional>

#include "skipopt/graph.hpp"
#include "skipopt/tape.hpp"

namespace skipopt {

/// Weights for every parametric trunk layer plus every projection skip.
struct ParamSet {
    std::map<LayerId, Tensor> layer;
    std::map<SkipId, Tensor> skip;
};

/// Weight tensor dims implied by the graph for a parametric layer / a
/// projection skip.
std::vector<int> layer_weight_dims(const LayerGroup& layer);
std::vector<int> skip_weight_dims(const NetworkGraph& graph, const SkipEdge& skip);

/// He-style normal initialization, deterministic in `seed`.
ParamSet init_params(const NetworkGraph& graph, unsigned long long seed);

/// Fills in weights for layers/skips the set lacks (used after a transform
/// introduced new projection skips mid-training).
void complete_params(const NetworkGraph& graph, ParamSet& params,
                     unsigned long long seed);

struct ForwardOptions {
    std::optional<QuantSpec> quantize_weights; // fake-quantize weights each pass
};

/// One taped evaluation of the graph. Owns the tape so gradients can be read
/// back per parameter after backward().
struct ForwardPass {
    std::unique_ptr<Tape> tape;
    Tape::NodeId output = -1;
    std::map<LayerId, Tape::NodeId> layer_params;
    std::map<SkipId, Tape::NodeId> skip_params;

    const Tensor& output_value() const { return tape->value(output); }
};

/// Evaluates the graph in trunk order; every Add joins the running value with
/// its skip operand. Throws std::invalid_argument naming the layer on shape
/// mismatch. `train` leaves parameters gradient-tracked.
ForwardPass forward(const NetworkGraph& graph, const ParamSet& params,
                    const Tensor& input, bool train = true,
                    const ForwardOptions& options = {});

/// Convenience non-training evaluation returning only the output tensor.
Tensor forward_value(const NetworkGraph& graph, const ParamSet& params,
                     const Tensor& input, const ForwardOptions& options = {});

/// Reads accumulated parameter gradients out of a finished pass.
ParamSet collect_gradients(const ForwardPass& pass);

} // namespace skipopt
