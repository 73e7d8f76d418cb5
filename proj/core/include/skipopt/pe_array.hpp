#pragma once

#include <json.hpp>

#include "skipopt/graph.hpp"

namespace skipopt {

/// Reconfigurable 2D multiply-accumulate array. Layers are programmed onto
/// the array one invocation at a time; residual additions run on the
/// processor side and cost off-chip transfers instead of PE cycles.
/// utilization, per_invocation_overhead_cycles and mem_bits_per_cycle are
/// calibration constants; the committed defaults were fitted once against a
/// reference 672-PE design's measured throughput (see tools `calibrate`).
struct PEArrayConfig {
    int rows = 7;
    int cols = 96;
    double clock_hz = 250e6;
    int batch = 7;
    int bits_in = 8;
    int bits_weight = 8;
    int bits_out = 8;
    long long per_invocation_overhead_cycles = 63544;
    double utilization = 0.9;
    double mem_bits_per_cycle = 62.584;

    long long pe_count() const { return static_cast<long long>(rows) * cols; }
    bool valid() const {
        return rows >= 1 && cols >= 1 && clock_hz > 0 && batch >= 1 && bits_in >= 1 &&
               bits_weight >= 1 && bits_out >= 1 && utilization > 0 &&
               utilization <= 1.0 && per_invocation_overhead_cycles >= 0 &&
               mem_bits_per_cycle > 0;
    }
};

/// Off-chip transfer totals, bits per image. Weight traffic is divided by the
/// batch (weights are rotated on chip and reused across the batch).
struct TrafficBreakdown {
    double input_bits = 0;
    double weight_bits = 0;
    double output_bits = 0;
    double skip_bits = 0; // residual fetch + summed store at each Add

    double total_bits() const { return input_bits + weight_bits + output_bits + skip_bits; }
};

struct ScheduleReport {
    long long invocations = 0;       // scheduled conv/dense executions
    unsigned long long total_cycles = 0; // per batch
    double fps = 0;
    double time_per_image_s = 0;
    double latency_s = 0;
    TrafficBreakdown traffic;        // per image
    double mem_bits_per_image = 0;
};

/// Multiply-accumulate count of one parametric layer for a single image.
long long layer_macs(const LayerGroup& layer);
/// MACs of a projection skip's 1x1 conv.
long long skip_macs(const NetworkGraph& graph, const SkipEdge& skip);

/// Cycle model: each conv/dense layer (and each projection conv) is one
/// invocation costing ceil(batch*MACs / (PEs*utilization)) plus the
/// per-invocation overhead; residual adds stall the engine for their off-chip
/// transfers at mem_bits_per_cycle.
ScheduleReport schedule(const NetworkGraph& graph, const PEArrayConfig& cfg);

TrafficBreakdown memory_traffic(const NetworkGraph& graph, const PEArrayConfig& cfg);

/// {accuracy?, fps, time_per_image_s, latency_s, mem_mb_per_image,
///  invocations} plus the itemized traffic.
nlohmann::json pe_report_json(const ScheduleReport& report,
                              std::optional<double> accuracy = std::nullopt);

/// Solves overhead and memory-stall constants so the model reproduces two
/// reference throughput measurements (with and without skips) at a chosen
/// utilization. Used once to produce the committed defaults.
struct CalibrationFit {
    long long per_invocation_overhead_cycles = 0;
    double mem_bits_per_cycle = 0;
    double fps_with = 0;    // model fps after the fit
    double fps_without = 0;
};
CalibrationFit fit_calibration(const NetworkGraph& with_skips,
                               const NetworkGraph& without_skips, PEArrayConfig cfg,
                               double target_fps_with, double target_fps_without);

} // namespace skipopt
