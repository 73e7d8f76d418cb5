#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "skipopt/dataflow.hpp"

namespace skipopt {

/// Place-and-route style totals. BRAM is counted in 18Kb half-block units, so
/// halves are representable.
struct ResourceEstimate {
    double lut = 0;
    double ff = 0;
    double bram = 0;
    double dsp = 0;

    ResourceEstimate& operator+=(const ResourceEstimate& o) {
        lut += o.lut;
        ff += o.ff;
        bram += o.bram;
        dsp += o.dsp;
        return *this;
    }
};

/// Calibration data for the two-conv residual unit: measured utilization at
/// filter counts {16, 32, 64} per precision and variant.
struct FixturePoint {
    int filters = 0;
    ResourceEstimate cost;
};

class FixtureTable {
public:
    /// Built-in calibration measured at <8,3> and <16,6>.
    static FixtureTable builtin();
    /// Replaces the built-in data from a JSON file (testing hook); the file
    /// layout matches fixtures_to_json().
    static FixtureTable from_file(const std::string& path);
    /// builtin() unless the environment variable SKIPOPT_FIXTURES names a file.
    static const FixtureTable& active();

    bool has_precision(int total_bits, int integer_bits) const;
    const std::vector<FixturePoint>& series(int total_bits, int integer_bits,
                                            HwVariant variant) const;

    /// Piecewise-linear in the filter count; beyond the calibrated range the
    /// nearest segment's slope extrapolates.
    ResourceEstimate block_cost(int total_bits, int integer_bits, HwVariant variant,
                                int filters) const;

    nlohmann::json to_json() const;
    static FixtureTable from_json(const nlohmann::json& j);

private:
    struct Series {
        int total_bits, integer_bits;
        HwVariant variant;
        std::vector<FixturePoint> points;
    };
    std::vector<Series> series_;
};

/// Per-block fixture lookup summed over the recognized residual units; the
/// stem and any classifier layers are excluded by design. Throws
/// std::runtime_error("uncalibrated: ...") for unsupported precisions or
/// unrecognizable blocks.
ResourceEstimate estimate_resources(const DataflowArch& arch, const HwConfig& cfg);

struct LatencyEstimate {
    long long latency_cycles = 0;
    long long initiation_interval = 0; // cycles of the slowest stage
};

/// Conv stages cost output_elements * reuse_factor, elementwise stages cost
/// output_elements. The fill term sums trunk conv delays, which every variant
/// of a block shares, so Traditional/Removed/Shortened report identical
/// cycles by construction.
LatencyEstimate estimate_latency(const DataflowArch& arch, const HwConfig& cfg);

/// Report document per External Interfaces:
/// {variant, precision, per_stage, fifos, resources, latency_cycles,
///  initiation_interval}.
nlohmann::json dataflow_report_json(const DataflowArch& arch, const HwConfig& cfg,
                                    const ResourceEstimate& resources,
                                    const LatencyEstimate& latency);

/// One CSV row per variant for spreadsheet comparison.
std::string dataflow_csv_header();
std::string dataflow_csv_row(const DataflowArch& arch, const ResourceEstimate& r,
                             const LatencyEstimate& l);

} // namespace skipopt
