#include "skipopt/pe_array.hpp"

#include <cmath>
#include <stdexcept>

namespace skipopt {

using nlohmann::json;

long long layer_macs(const LayerGroup& layer) {
    if (layer.op == LayerOp::Conv) {
        long long k_h = std::min(layer.kernel, layer.in_shape.height);
        long long k_w = std::min(layer.kernel, layer.in_shape.width);
        return static_cast<long long>(layer.out_shape.height) * layer.out_shape.width *
               layer.out_channels * k_h * k_w * layer.in_shape.channels;
    }
    if (layer.op == LayerOp::Dense)
        return layer.in_shape.elements() * layer.out_features;
    return 0;
}

long long skip_macs(const NetworkGraph& graph, const SkipEdge& skip) {
    if (skip.kind != SkipKind::Projection1x1) return 0;
    const LayerGroup* src = graph.find_layer(skip.source);
    const LayerGroup* sink = graph.find_layer(skip.sink);
    return static_cast<long long>(sink->out_shape.height) * sink->out_shape.width *
           skip.proj_out_channels * src->out_shape.channels;
}

namespace {

long long ceil_div_ll(double a, double b) {
    return static_cast<long long>(std::ceil(a / b));
}

/// Bits moved by the processor-side residual add of one skip, per image:
/// one fetch of the buffered skip tensor plus one store of the sum.
double skip_add_bits(const NetworkGraph& graph, const SkipEdge& skip, int bits_out) {
    const LayerGroup* sink = graph.find_layer(skip.sink);
    double elems = static_cast<double>(sink->out_shape.elements());
    return 2.0 * elems * bits_out;
}

} // namespace

TrafficBreakdown memory_traffic(const NetworkGraph& graph, const PEArrayConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("pe-array config invalid");
    TrafficBreakdown t;
    for (const auto& l : graph.layers) {
        if (!l.parametric()) continue; // elementwise ops run on streamed data
        t.input_bits += static_cast<double>(l.in_shape.elements()) * cfg.bits_in;
        t.output_bits += static_cast<double>(l.out_shape.elements()) * cfg.bits_out;
        double weights = l.op == LayerOp::Conv
                             ? static_cast<double>(l.kernel) * l.kernel *
                                   l.in_shape.channels * l.out_channels
                             : static_cast<double>(l.in_shape.elements()) * l.out_features;
        t.weight_bits += weights * cfg.bits_weight / cfg.batch;
    }
    for (const auto& s : graph.skips) {
        if (s.kind == SkipKind::Projection1x1) {
            const LayerGroup* src = graph.find_layer(s.source);
            const LayerGroup* sink = graph.find_layer(s.sink);
            t.input_bits += static_cast<double>(src->out_shape.elements()) * cfg.bits_in;
            t.output_bits += static_cast<double>(sink->out_shape.elements()) * cfg.bits_out;
            t.weight_bits += static_cast<double>(src->out_shape.channels) *
                             s.proj_out_channels * cfg.bits_weight / cfg.batch;
        }
        t.skip_bits += skip_add_bits(graph, s, cfg.bits_out);
    }
    return t;
}

ScheduleReport schedule(const NetworkGraph& graph, const PEArrayConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("pe-array config invalid");

    ScheduleReport report;
    double pe_throughput = static_cast<double>(cfg.pe_count()) * cfg.utilization;

    unsigned long long cycles = 0;
    for (const auto& l : graph.layers) {
        if (!l.parametric()) continue;
        cycles += ceil_div_ll(static_cast<double>(cfg.batch) * layer_macs(l), pe_throughput);
        cycles += cfg.per_invocation_overhead_cycles;
        report.invocations++;
    }
    double skip_transfer_bits = 0;
    for (const auto& s : graph.skips) {
        if (s.kind == SkipKind::Projection1x1) {
            cycles += ceil_div_ll(static_cast<double>(cfg.batch) * skip_macs(graph, s),
                                  pe_throughput);
            cycles += cfg.per_invocation_overhead_cycles;
            report.invocations++;
        }
        skip_transfer_bits += skip_add_bits(graph, s, cfg.bits_out);
    }
    if (skip_transfer_bits > 0)
        cycles += ceil_div_ll(cfg.batch * skip_transfer_bits, cfg.mem_bits_per_cycle);

    report.total_cycles = cycles;
    if (cycles > 0) {
        report.fps = cfg.clock_hz * cfg.batch / static_cast<double>(cycles);
        report.latency_s = static_cast<double>(cycles) / cfg.clock_hz;
        report.time_per_image_s = report.latency_s / cfg.batch;
    }
    report.traffic = memory_traffic(graph, cfg);
    report.mem_bits_per_image = report.traffic.total_bits();
    return report;
}

json pe_report_json(const ScheduleReport& report, std::optional<double> accuracy) {
    json j;
    if (accuracy) j["accuracy"] = *accuracy;
    j["fps"] = report.fps;
    j["time_per_image_s"] = report.time_per_image_s;
    j["latency_s"] = report.latency_s;
    j["mem_mb_per_image"] = report.mem_bits_per_image / 1e6;
    j["invocations"] = report.invocations;
    j["total_cycles"] = report.total_cycles;
    j["traffic_bits"] = {{"input", report.traffic.input_bits},
                         {"weight", report.traffic.weight_bits},
                         {"output", report.traffic.output_bits},
                         {"skip", report.traffic.skip_bits},
                         {"total", report.traffic.total_bits()}};
    return j;
}

CalibrationFit fit_calibration(const NetworkGraph& with_skips,
                               const NetworkGraph& without_skips, PEArrayConfig cfg,
                               double target_fps_with, double target_fps_without) {
    double pe_throughput = static_cast<double>(cfg.pe_count()) * cfg.utilization;

    auto compute_cycles = [&](const NetworkGraph& g, long long& invocations,
                              double& skip_bits) {
        double cycles = 0;
        invocations = 0;
        skip_bits = 0;
        for (const auto& l : g.layers) {
            if (!l.parametric()) continue;
            cycles += std::ceil(static_cast<double>(cfg.batch) * layer_macs(l) / pe_throughput);
            invocations++;
        }
        for (const auto& s : g.skips) {
            if (s.kind == SkipKind::Projection1x1) {
                cycles +=
                    std::ceil(static_cast<double>(cfg.batch) * skip_macs(g, s) / pe_throughput);
                invocations++;
            }
            skip_bits += skip_add_bits(g, s, cfg.bits_out);
        }
        return cycles;
    };

    long long inv_with = 0, inv_without = 0;
    double bits_with = 0, bits_without = 0;
    double c_with = compute_cycles(with_skips, inv_with, bits_with);
    double c_without = compute_cycles(without_skips, inv_without, bits_without);
    if (bits_without != 0)
        throw std::invalid_argument("fit_calibration: the no-skip graph still has skips");

    double target_with = cfg.clock_hz * cfg.batch / target_fps_with;
    double target_without = cfg.clock_hz * cfg.batch / target_fps_without;

    double overhead = (target_without - c_without) / static_cast<double>(inv_without);
    if (overhead < 0)
        throw std::runtime_error(
            "fit_calibration: utilization too low, compute alone exceeds the target");
    long long overhead_cycles = static_cast<long long>(std::llround(overhead));

    double stall = target_with - c_with - static_cast<double>(inv_with) * overhead_cycles;
    if (stall <= 0)
        throw std::runtime_error(
            "fit_calibration: no positive memory stall explains the throughput gap");
    double bw = cfg.batch * bits_with / stall;

    CalibrationFit fit;
    fit.per_invocation_overhead_cycles = overhead_cycles;
    fit.mem_bits_per_cycle = bw;
    cfg.per_invocation_overhead_cycles = overhead_cycles;
    cfg.mem_bits_per_cycle = bw;
    fit.fps_with = schedule(with_skips, cfg).fps;
    fit.fps_without = schedule(without_skips, cfg).fps;
    return fit;
}

} // namespace skipopt
