#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skipopt/datasets.hpp"
#include "skipopt/evaluator.hpp"
#include "skipopt/kd.hpp"
#include "skipopt/transforms.hpp"

namespace skipopt {

/// Schedule for gradual skip alteration under distillation: one alteration
/// every `alpha` epochs (at epochs alpha, 2*alpha, ... while candidates
/// remain), training the student against the frozen teacher in between.
struct TrainPlan {
    int alpha = 3;
    int total_epochs = 30;
    AlterMode mode = AlterMode::Remove;
    double lr = 0.05;
    KDLossConfig loss;
    std::optional<QuantSpec> quantize_student;
    unsigned long long seed = 1;
    int batch_size = 32;
};

struct EpochRecord {
    int epoch = 0;
    int skips_remaining = 0;
    int max_span = 0;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
    bool altered = false;
    int altered_skip = -1;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::vector<int> alteration_epochs;
    std::vector<std::string> warnings;
    NetworkGraph final_graph;
    ParamSet final_params;
};

/// Throws std::invalid_argument for out-of-range fields; appends a warning to
/// `warnings` when total_epochs cannot cover every alteration.
void validate_plan(const TrainPlan& plan, const NetworkGraph& student,
                   std::vector<std::string>& warnings);

/// Plain cross-entropy training from a fresh He initialization (no teacher,
/// no alterations). Reproducible from `seed`; 0 epochs returns the untouched
/// initialization.
ParamSet pretrain(const NetworkGraph& graph, const Dataset& data, int epochs,
                  double lr, unsigned long long seed);

/// One epoch of cross-entropy SGD over `data` (shuffled minibatches, mean
/// gradient per batch). Returns the mean per-sample loss.
double train_epoch_ce(const NetworkGraph& graph, ParamSet& params,
                      const Dataset& data, double lr, unsigned long long seed,
                      int batch_size = 32);

/// Algorithm: for every epoch i, first alter the student once when i != 0,
/// i % alpha == 0 and a candidate skip remains; then train the student for
/// the epoch with the blended distillation loss. The teacher never changes.
TrainReport train_hardware_aware(const NetworkGraph& teacher_graph,
                                 const ParamSet& teacher_params,
                                 NetworkGraph student_graph,
                                 ParamSet student_params, const TrainPlan& plan,
                                 const Dataset& data);

double eval_accuracy(const NetworkGraph& graph, const ParamSet& params,
                     const Dataset& data,
                     const ForwardOptions& options = {});

nlohmann::json params_to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& j);
void save_params(const ParamSet& params, const std::string& path);
ParamSet load_params(const std::string& path);

nlohmann::json train_report_to_json(const TrainReport& report);
void write_report_csv(const TrainReport& report, const std::string& path);

} // namespace skipopt
