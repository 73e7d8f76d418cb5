#include "skipopt/evaluator.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace skipopt {

std::vector<int> layer_weight_dims(const LayerGroup& layer) {
    if (layer.op == LayerOp::Conv)
        return {layer.kernel, layer.kernel, layer.in_shape.channels, layer.out_channels};
    if (layer.op == LayerOp::Dense)
        return {static_cast<int>(layer.in_shape.elements()), layer.out_features};
    return {};
}

std::vector<int> skip_weight_dims(const NetworkGraph& graph, const SkipEdge& skip) {
    if (skip.kind != SkipKind::Projection1x1) return {};
    const LayerGroup* src = graph.find_layer(skip.source);
    if (!src) throw std::invalid_argument("skip " + std::to_string(skip.id) +
                                          ": source layer not found");
    return {1, 1, src->out_shape.channels, skip.proj_out_channels};
}

namespace {

Tensor he_normal(const std::vector<int>& dims, int fan_in, std::mt19937_64& rng) {
    Tensor t(dims);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
    for (double& v : t.v) v = dist(rng);
    return t;
}

int layer_fan_in(const LayerGroup& layer) {
    if (layer.op == LayerOp::Conv)
        return layer.kernel * layer.kernel * layer.in_shape.channels;
    return static_cast<int>(layer.in_shape.elements());
}

} // namespace

ParamSet init_params(const NetworkGraph& graph, unsigned long long seed) {
    ParamSet params;
    complete_params(graph, params, seed);
    return params;
}

void complete_params(const NetworkGraph& graph, ParamSet& params,
                     unsigned long long seed) {
    // One stream per parameter keyed by its id keeps initialization stable
    // under graph rewrites that leave other layers in place.
    for (const auto& l : graph.layers) {
        if (!l.parametric() || params.layer.count(l.id)) continue;
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<unsigned long long>(l.id) * 2 + 1);
        params.layer[l.id] = he_normal(layer_weight_dims(l), layer_fan_in(l), rng);
    }
    for (const auto& s : graph.skips) {
        if (s.kind != SkipKind::Projection1x1 || params.skip.count(s.id)) continue;
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<unsigned long long>(s.id) * 2 + 2);
        const LayerGroup* src = graph.find_layer(s.source);
        params.skip[s.id] = he_normal(skip_weight_dims(graph, s), src->out_shape.channels, rng);
    }
}

ForwardPass forward(const NetworkGraph& graph, const ParamSet& params,
                    const Tensor& input, bool train, const ForwardOptions& options) {
    if (graph.layers.empty()) throw std::invalid_argument("forward: empty graph");
    TensorShape in_shape = graph.input_shape();
    if (input.dims != std::vector<int>{in_shape.height, in_shape.width, in_shape.channels})
        throw std::invalid_argument("forward: input does not match graph input shape");

    ForwardPass pass;
    pass.tape = std::make_unique<Tape>();
    Tape& tape = *pass.tape;

    auto weight_node = [&](const Tensor& w, const std::vector<int>& want,
                           const std::string& who, Tape::NodeId& out_param) {
        if (w.dims != want)
            throw std::invalid_argument("forward: weight shape mismatch at " + who);
        Tape::NodeId raw = tape.leaf(w, train);
        out_param = raw;
        if (options.quantize_weights) raw = tape.fake_quantize(raw, *options.quantize_weights);
        return raw;
    };

    std::map<LayerId, Tape::NodeId> value_at; // layer id -> its output node
    Tape::NodeId current = tape.leaf(input, false);

    // Skips are looked up by sink; the list is sorted and each Add has one.
    std::map<LayerId, const SkipEdge*> skip_at_sink;
    for (const auto& s : graph.skips) skip_at_sink[s.sink] = &s;

    for (const auto& l : graph.layers) {
        switch (l.op) {
            case LayerOp::Conv: {
                auto it = params.layer.find(l.id);
                if (it == params.layer.end())
                    throw std::invalid_argument("forward: missing weights for layer " +
                                                std::to_string(l.id));
                Tape::NodeId w = weight_node(it->second, layer_weight_dims(l),
                                             "layer " + std::to_string(l.id),
                                             pass.layer_params[l.id]);
                current = tape.conv2d(current, w, l.stride);
                break;
            }
            case LayerOp::Dense: {
                auto it = params.layer.find(l.id);
                if (it == params.layer.end())
                    throw std::invalid_argument("forward: missing weights for layer " +
                                                std::to_string(l.id));
                Tape::NodeId w = weight_node(it->second, layer_weight_dims(l),
                                             "layer " + std::to_string(l.id),
                                             pass.layer_params[l.id]);
                current = tape.dense(current, w);
                break;
            }
            case LayerOp::ReLU:
                current = tape.relu(current);
                break;
            case LayerOp::BatchNormFolded:
                break; // folded into the preceding conv; nothing to compute
            case LayerOp::Quantize:
                current = tape.fake_quantize(current, QuantSpec{l.total_bits, l.integer_bits});
                break;
            case LayerOp::Add: {
                auto it = skip_at_sink.find(l.id);
                if (it == skip_at_sink.end())
                    throw std::invalid_argument("forward: Add layer " + std::to_string(l.id) +
                                                " has no incoming skip");
                const SkipEdge& s = *it->second;
                auto src_it = value_at.find(s.source);
                if (src_it == value_at.end())
                    throw std::invalid_argument("forward: skip " + std::to_string(s.id) +
                                                " sources an unknown layer");
                Tape::NodeId residual = src_it->second;
                if (s.kind == SkipKind::Projection1x1) {
                    auto wp = params.skip.find(s.id);
                    if (wp == params.skip.end())
                        throw std::invalid_argument("forward: missing weights for skip " +
                                                    std::to_string(s.id));
                    Tape::NodeId w = weight_node(wp->second, skip_weight_dims(graph, s),
                                                 "skip " + std::to_string(s.id),
                                                 pass.skip_params[s.id]);
                    residual = tape.conv2d(residual, w, s.proj_stride);
                }
                current = tape.add(current, residual);
                break;
            }
        }
        value_at[l.id] = current;
    }

    pass.output = current;
    return pass;
}

Tensor forward_value(const NetworkGraph& graph, const ParamSet& params,
                     const Tensor& input, const ForwardOptions& options) {
    ForwardPass pass = forward(graph, params, input, /*train=*/false, options);
    return pass.output_value();
}

ParamSet collect_gradients(const ForwardPass& pass) {
    ParamSet grads;
    for (const auto& [id, node] : pass.layer_params) grads.layer[id] = pass.tape->grad(node);
    for (const auto& [id, node] : pass.skip_params) grads.skip[id] = pass.tape->grad(node);
    return grads;
}

} // namespace skipopt
