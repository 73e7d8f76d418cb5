#include "skipopt/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "skipopt/graph_json.hpp"

namespace skipopt {

namespace {

using nlohmann::json;

std::vector<size_t> shuffled_indices(size_t n, unsigned long long seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

void accumulate(ParamSet& into, const ParamSet& grads) {
    for (const auto& [id, g] : grads.layer) {
        auto it = into.layer.find(id);
        if (it == into.layer.end()) {
            into.layer[id] = g;
        } else {
            for (size_t i = 0; i < g.v.size(); ++i) it->second.v[i] += g.v[i];
        }
    }
    for (const auto& [id, g] : grads.skip) {
        auto it = into.skip.find(id);
        if (it == into.skip.end()) {
            into.skip[id] = g;
        } else {
            for (size_t i = 0; i < g.v.size(); ++i) it->second.v[i] += g.v[i];
        }
    }
}

void apply_mean_step(ParamSet& params, const ParamSet& grad_sum, double lr, int count) {
    double step = lr / std::max(1, count);
    for (auto& [id, g] : grad_sum.layer) {
        auto it = params.layer.find(id);
        if (it != params.layer.end())
            for (size_t i = 0; i < g.v.size(); ++i) it->second.v[i] -= step * g.v[i];
    }
    for (auto& [id, g] : grad_sum.skip) {
        auto it = params.skip.find(id);
        if (it != params.skip.end())
            for (size_t i = 0; i < g.v.size(); ++i) it->second.v[i] -= step * g.v[i];
    }
}

/// Drops parameters for layers/skips no longer present in the graph.
void prune_params(const NetworkGraph& graph, ParamSet& params) {
    for (auto it = params.layer.begin(); it != params.layer.end();) {
        it = graph.find_layer(it->first) ? std::next(it) : params.layer.erase(it);
    }
    for (auto it = params.skip.begin(); it != params.skip.end();) {
        it = graph.find_skip(it->first) ? std::next(it) : params.skip.erase(it);
    }
}

int argmax(const Tensor& t) {
    return static_cast<int>(std::max_element(t.v.begin(), t.v.end()) - t.v.begin());
}

} // namespace

void validate_plan(const TrainPlan& plan, const NetworkGraph& student,
                   std::vector<std::string>& warnings) {
    if (plan.alpha < 1) throw std::invalid_argument("plan: alpha must be >= 1");
    if (plan.total_epochs < 0) throw std::invalid_argument("plan: total_epochs must be >= 0");
    if (plan.lr <= 0.0) throw std::invalid_argument("plan: lr must be positive");
    if (plan.batch_size < 1) throw std::invalid_argument("plan: batch_size must be >= 1");
    if (!plan.loss.valid()) throw std::invalid_argument("plan: beta must be in [0,1]");
    if (plan.quantize_student && !plan.quantize_student->valid())
        throw std::invalid_argument("plan: invalid quantization spec");

    int needed = plan.mode == AlterMode::Remove
                     ? static_cast<int>(student.skips.size())
                     : static_cast<int>(std::count_if(
                           student.skips.begin(), student.skips.end(),
                           [](const SkipEdge& s) { return s.span > 1; }));
    if (plan.total_epochs < plan.alpha * needed)
        warnings.push_back("total_epochs " + std::to_string(plan.total_epochs) +
                           " < alpha * candidate skips (" +
                           std::to_string(plan.alpha * needed) +
                           "): not all skips will be altered");
}

double train_epoch_ce(const NetworkGraph& graph, ParamSet& params,
                      const Dataset& data, double lr, unsigned long long seed,
                      int batch_size) {
    auto order = shuffled_indices(data.size(), seed);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
        size_t stop = std::min(order.size(), start + batch_size);
        ParamSet grad_sum;
        for (size_t k = start; k < stop; ++k) {
            ForwardPass pass = forward(graph, params, data.x[order[k]]);
            Tape::NodeId loss =
                pass.tape->cross_entropy_with_softmax(pass.output, data.y[order[k]]);
            loss_sum += pass.tape->value(loss).v[0];
            pass.tape->backward(loss);
            accumulate(grad_sum, collect_gradients(pass));
        }
        apply_mean_step(params, grad_sum, lr, static_cast<int>(stop - start));
    }
    return loss_sum / static_cast<double>(data.size());
}

ParamSet pretrain(const NetworkGraph& graph, const Dataset& data, int epochs,
                  double lr, unsigned long long seed) {
    if (data.size() == 0) throw std::invalid_argument("pretrain: dataset is empty");
    ParamSet params = init_params(graph, seed);
    for (int e = 0; e < epochs; ++e)
        train_epoch_ce(graph, params, data, lr, seed + 0x517cc1b727220a95ULL * (e + 1),
                       32);
    return params;
}

double eval_accuracy(const NetworkGraph& graph, const ParamSet& params,
                     const Dataset& data, const ForwardOptions& options) {
    if (data.size() == 0) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        Tensor out = forward_value(graph, params, data.x[i], options);
        if (argmax(out) == data.y[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainReport train_hardware_aware(const NetworkGraph& teacher_graph,
                                 const ParamSet& teacher_params,
                                 NetworkGraph student_graph,
                                 ParamSet student_params, const TrainPlan& plan,
                                 const Dataset& data) {
    if (data.size() == 0)
        throw std::invalid_argument("train_hardware_aware: dataset is empty");
    TrainReport report;
    validate_plan(plan, student_graph, report.warnings);

    // The teacher is frozen, so its class probabilities are fixed per sample.
    std::vector<Tensor> teacher_probs;
    teacher_probs.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        Tape tape;
        Tape::NodeId out = tape.leaf(forward_value(teacher_graph, teacher_params, data.x[i]));
        teacher_probs.push_back(tape.value(tape.softmax(out)));
    }

    ForwardOptions options;
    if (plan.quantize_student) options.quantize_weights = plan.quantize_student;

    auto has_candidate = [&]() {
        return plan.mode == AlterMode::Remove ? !student_graph.skips.empty()
                                              : student_graph.max_skip_span() > 1;
    };

    for (int epoch = 0; epoch < plan.total_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;

        if (epoch != 0 && epoch % plan.alpha == 0 && has_candidate()) {
            if (plan.mode == AlterMode::Remove) {
                auto r = remove_next_skip(student_graph);
                student_graph = std::move(r.graph);
                rec.altered_skip = *r.removed;
            } else {
                auto r = shorten_next_skip(student_graph);
                student_graph = std::move(r.graph);
                rec.altered_skip = *r.split;
                // New projection splits (bottleneck-style graphs) need weights.
                complete_params(student_graph, student_params,
                                plan.seed + 0x2545f4914f6cdd1dULL * (epoch + 1));
            }
            prune_params(student_graph, student_params);
            rec.altered = true;
            report.alteration_epochs.push_back(epoch);
        }

        auto order = shuffled_indices(data.size(), plan.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(plan.batch_size)) {
            size_t stop = std::min(order.size(), start + plan.batch_size);
            ParamSet grad_sum;
            for (size_t k = start; k < stop; ++k) {
                size_t i = order[k];
                ForwardPass pass = forward(student_graph, student_params, data.x[i],
                                           /*train=*/true, options);
                Tape::NodeId loss = kd_loss_node(*pass.tape, pass.output,
                                                 teacher_probs[i], data.y[i], plan.loss);
                loss_sum += pass.tape->value(loss).v[0];
                pass.tape->backward(loss);
                accumulate(grad_sum, collect_gradients(pass));
            }
            apply_mean_step(student_params, grad_sum, plan.lr,
                            static_cast<int>(stop - start));
        }

        rec.train_loss = loss_sum / static_cast<double>(data.size());
        rec.eval_accuracy = eval_accuracy(student_graph, student_params, data, options);
        rec.skips_remaining = static_cast<int>(student_graph.skips.size());
        rec.max_span = student_graph.max_skip_span();
        report.epochs.push_back(rec);
    }

    report.final_graph = std::move(student_graph);
    report.final_params = std::move(student_params);
    return report;
}

json params_to_json(const ParamSet& params) {
    json j;
    j["layer"] = json::object();
    for (const auto& [id, t] : params.layer)
        j["layer"][std::to_string(id)] = {{"dims", t.dims}, {"values", t.v}};
    j["skip"] = json::object();
    for (const auto& [id, t] : params.skip)
        j["skip"][std::to_string(id)] = {{"dims", t.dims}, {"values", t.v}};
    return j;
}

ParamSet params_from_json(const json& j) {
    ParamSet p;
    for (const auto& [key, jt] : j.at("layer").items()) {
        Tensor t(jt.at("dims").get<std::vector<int>>());
        t.v = jt.at("values").get<std::vector<double>>();
        p.layer[std::stoi(key)] = std::move(t);
    }
    for (const auto& [key, jt] : j.at("skip").items()) {
        Tensor t(jt.at("dims").get<std::vector<int>>());
        t.v = jt.at("values").get<std::vector<double>>();
        p.skip[std::stoi(key)] = std::move(t);
    }
    return p;
}

void save_params(const ParamSet& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << params_to_json(params).dump() << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

ParamSet load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return params_from_json(json::parse(in));
}

json train_report_to_json(const TrainReport& report) {
    json j;
    j["epochs"] = json::array();
    for (const auto& r : report.epochs) {
        j["epochs"].push_back({{"epoch", r.epoch},
                               {"skips_remaining", r.skips_remaining},
                               {"max_span", r.max_span},
                               {"train_loss", r.train_loss},
                               {"eval_accuracy", r.eval_accuracy},
                               {"altered", r.altered},
                               {"altered_skip", r.altered_skip}});
    }
    j["alteration_epochs"] = report.alteration_epochs;
    j["warnings"] = report.warnings;
    j["final_graph"] = graph_to_json(report.final_graph);
    j["final_params"] = params_to_json(report.final_params);
    return j;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "epoch,skips_remaining,loss,accuracy\n";
    for (const auto& r : report.epochs) {
        out << r.epoch << "," << r.skips_remaining << "," << r.train_loss << ","
            << r.eval_accuracy << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace skipopt
