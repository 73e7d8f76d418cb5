#include "skipopt/kd.hpp"

#include <cmath>
#include <stdexcept>

namespace skipopt {

double kd_loss(const Tensor& student_probs, const Tensor& teacher_probs, int label,
               const KDLossConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("kd_loss: beta must be in [0,1]");
    if (!student_probs.same_dims(teacher_probs))
        throw std::invalid_argument("kd_loss: student/teacher shape mismatch");
    if (label < 0 || static_cast<size_t>(label) >= student_probs.size())
        throw std::invalid_argument("kd_loss: label out of range");

    double g = -std::log(student_probs.v[label]);
    double h = 0.0;
    for (size_t i = 0; i < student_probs.size(); ++i) {
        double d = teacher_probs.v[i] - student_probs.v[i];
        h += d * d;
    }
    h /= static_cast<double>(student_probs.size());
    return (1.0 - cfg.beta) * g + cfg.beta * h;
}

Tape::NodeId kd_loss_node(Tape& tape, Tape::NodeId student_logits,
                          const Tensor& teacher_probs, int label,
                          const KDLossConfig& cfg) {
    if (!cfg.valid()) throw std::invalid_argument("kd_loss: beta must be in [0,1]");
    Tape::NodeId g = tape.cross_entropy_with_softmax(student_logits, label);
    Tape::NodeId student_probs = tape.softmax(student_logits);
    Tape::NodeId teacher = tape.leaf(teacher_probs, /*requires_grad=*/false);
    Tape::NodeId h = tape.mse(student_probs, teacher);
    return tape.axpby(1.0 - cfg.beta, g, cfg.beta, h);
}

} // namespace skipopt
