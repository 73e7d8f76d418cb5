#include "skipopt/resources.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace skipopt {

using nlohmann::json;

namespace {

FixturePoint point(int f, double lut, double ff, double bram, double dsp) {
    return {f, {lut, ff, bram, dsp}};
}

HwVariant variant_from_name(const std::string& name) {
    if (name == "traditional") return HwVariant::Traditional;
    if (name == "removed") return HwVariant::Removed;
    if (name == "shortened") return HwVariant::Shortened;
    throw std::runtime_error("unknown variant: " + name);
}

} // namespace

FixtureTable FixtureTable::builtin() {
    FixtureTable t;
    // <8,3>: multiplier mapping keeps DSPs at zero and BRAM (weights only)
    // identical across variants.
    t.series_.push_back({8, 3, HwVariant::Traditional,
                         {point(16, 9984, 8654, 18.5, 0), point(32, 19566, 16183, 36.5, 0),
                          point(64, 42688, 31124, 82, 0)}});
    t.series_.push_back({8, 3, HwVariant::Removed,
                         {point(16, 8482, 7841, 18.5, 0), point(32, 16512, 14506, 36.5, 0),
                          point(64, 36882, 27815, 82, 0)}});
    t.series_.push_back({8, 3, HwVariant::Shortened,
                         {point(16, 9764, 8916, 18.5, 0), point(32, 18993, 16489, 36.5, 0),
                          point(64, 42121, 31850, 82, 0)}});
    // <16,6>: FIFOs join the weights in BRAM, so the variants now differ
    // there; DSPs stay equal across variants.
    t.series_.push_back({16, 6, HwVariant::Traditional,
                         {point(16, 14733, 17044, 60.5, 12), point(32, 28498, 32923, 124, 48),
                          point(64, 55699, 64564, 267.5, 192)}});
    t.series_.push_back({16, 6, HwVariant::Removed,
                         {point(16, 13320, 14935, 52.5, 12), point(32, 25330, 28747, 108, 48),
                          point(64, 50074, 56263, 235.5, 192)}});
    t.series_.push_back({16, 6, HwVariant::Shortened,
                         {point(16, 14933, 16438, 42.5, 12), point(32, 28184, 31764, 84.5, 48),
                          point(64, 55720, 62252, 203.5, 192)}});
    return t;
}

FixtureTable FixtureTable::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fixture table: " + path);
    return from_json(json::parse(in));
}

const FixtureTable& FixtureTable::active() {
    static FixtureTable table = [] {
        const char* override_path = std::getenv("SKIPOPT_FIXTURES");
        return override_path ? from_file(override_path) : builtin();
    }();
    return table;
}

bool FixtureTable::has_precision(int total_bits, int integer_bits) const {
    for (const auto& s : series_)
        if (s.total_bits == total_bits && s.integer_bits == integer_bits) return true;
    return false;
}

const std::vector<FixturePoint>& FixtureTable::series(int total_bits, int integer_bits,
                                                      HwVariant variant) const {
    for (const auto& s : series_) {
        if (s.total_bits == total_bits && s.integer_bits == integer_bits &&
            s.variant == variant)
            return s.points;
    }
    std::ostringstream os;
    os << "uncalibrated: no fixture data for precision <" << total_bits << ","
       << integer_bits << ">";
    throw std::runtime_error(os.str());
}

ResourceEstimate FixtureTable::block_cost(int total_bits, int integer_bits,
                                          HwVariant variant, int filters) const {
    const auto& pts = series(total_bits, integer_bits, variant);
    if (pts.size() < 2) throw std::runtime_error("uncalibrated: fixture series too short");

    for (const auto& p : pts)
        if (p.filters == filters) return p.cost;

    // Pick the segment containing `filters`, or the nearest one for
    // extrapolation beyond the calibrated range.
    size_t hi = 1;
    while (hi + 1 < pts.size() && filters > pts[hi].filters) ++hi;
    const FixturePoint& a = pts[hi - 1];
    const FixturePoint& b = pts[hi];
    double t = static_cast<double>(filters - a.filters) /
               static_cast<double>(b.filters - a.filters);
    auto lerp = [t](double x, double y) { return x + t * (y - x); };
    return {lerp(a.cost.lut, b.cost.lut), lerp(a.cost.ff, b.cost.ff),
            lerp(a.cost.bram, b.cost.bram), lerp(a.cost.dsp, b.cost.dsp)};
}

json FixtureTable::to_json() const {
    json j = json::array();
    for (const auto& s : series_) {
        json points = json::array();
        for (const auto& p : s.points)
            points.push_back({{"filters", p.filters},
                              {"lut", p.cost.lut},
                              {"ff", p.cost.ff},
                              {"bram", p.cost.bram},
                              {"dsp", p.cost.dsp}});
        j.push_back({{"total_bits", s.total_bits},
                     {"integer_bits", s.integer_bits},
                     {"variant", variant_name(s.variant)},
                     {"points", points}});
    }
    return j;
}

FixtureTable FixtureTable::from_json(const json& j) {
    FixtureTable t;
    for (const auto& js : j) {
        Series s{js.at("total_bits").get<int>(), js.at("integer_bits").get<int>(),
                 variant_from_name(js.at("variant").get<std::string>()),
                 {}};
        for (const auto& jp : js.at("points")) {
            s.points.push_back(point(jp.at("filters").get<int>(), jp.at("lut").get<double>(),
                                     jp.at("ff").get<double>(), jp.at("bram").get<double>(),
                                     jp.at("dsp").get<double>()));
        }
        std::sort(s.points.begin(), s.points.end(),
                  [](const FixturePoint& a, const FixturePoint& b) {
                      return a.filters < b.filters;
                  });
        t.series_.push_back(std::move(s));
    }
    return t;
}

ResourceEstimate estimate_resources(const DataflowArch& arch, const HwConfig& cfg) {
    const FixtureTable& table = FixtureTable::active();
    if (!table.has_precision(cfg.total_bits, cfg.integer_bits)) {
        std::ostringstream os;
        os << "uncalibrated: precision <" << cfg.total_bits << "," << cfg.integer_bits
           << "> has no fixture data (calibrated: <8,3>, <16,6>)";
        throw std::runtime_error(os.str());
    }
    ResourceEstimate total;
    for (const auto& block : arch.blocks) {
        if (!block.recognized)
            throw std::runtime_error(
                "uncalibrated: graph contains a block that is not the calibrated "
                "two-conv residual unit");
        total += table.block_cost(cfg.total_bits, cfg.integer_bits, arch.variant,
                                  block.filters);
    }
    return total;
}

LatencyEstimate estimate_latency(const DataflowArch& arch, const HwConfig&) {
    LatencyEstimate est;
    long long fill = 0;
    for (const auto& s : arch.stages) {
        est.initiation_interval = std::max(est.initiation_interval, s.cycles);
        if (!s.off_trunk) fill += s.conv_fill_delay;
    }
    est.latency_cycles = fill + est.initiation_interval;
    return est;
}

json dataflow_report_json(const DataflowArch& arch, const HwConfig& cfg,
                          const ResourceEstimate& resources,
                          const LatencyEstimate& latency) {
    json j;
    j["variant"] = variant_name(arch.variant);
    j["precision"] = {{"total_bits", cfg.total_bits}, {"integer_bits", cfg.integer_bits}};
    j["reuse_factor"] = cfg.reuse_factor;
    j["per_stage"] = json::array();
    for (const auto& s : arch.stages)
        j["per_stage"].push_back({{"kind", stage_kind_name(s.kind)}, {"cycles", s.cycles}});
    j["fifos"] = json::array();
    for (const auto& f : arch.fifos)
        j["fifos"].push_back({{"depth", f.depth}, {"binding", binding_name(f.binding)}});
    j["resources"] = {{"lut", resources.lut},
                      {"ff", resources.ff},
                      {"bram", resources.bram},
                      {"dsp", resources.dsp}};
    j["latency_cycles"] = latency.latency_cycles;
    j["initiation_interval"] = latency.initiation_interval;
    return j;
}

std::string dataflow_csv_header() {
    return "variant,lut,ff,bram,dsp,latency_cycles,initiation_interval,fifo_count,"
           "bram_fifos,shift_registers";
}

std::string dataflow_csv_row(const DataflowArch& arch, const ResourceEstimate& r,
                             const LatencyEstimate& l) {
    int brams = 0, shifts = 0;
    for (const auto& f : arch.fifos)
        (f.binding == FifoBinding::BramFifo ? brams : shifts)++;
    std::ostringstream os;
    os << variant_name(arch.variant) << "," << r.lut << "," << r.ff << "," << r.bram
       << "," << r.dsp << "," << l.latency_cycles << "," << l.initiation_interval << ","
       << arch.fifos.size() << "," << brams << "," << shifts;
    return os.str();
}

} // namespace skipopt
