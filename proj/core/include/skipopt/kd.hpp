#pragma once

#include "skipopt/tape.hpp"
#include "skipopt/tensor.hpp"

namespace skipopt {

/// Blended distillation loss (1-beta) * G(label, student) + beta * H(teacher,
/// student). G is categorical cross-entropy, H is mean-squared error; both
/// consume post-softmax class probabilities.
struct KDLossConfig {
    double beta = 0.35;
    bool valid() const { return beta >= 0.0 && beta <= 1.0; }
};

/// Scalar loss on probability vectors (already softmaxed). Differentiable
/// w.r.t. the student only; the teacher is a constant.
double kd_loss(const Tensor& student_probs, const Tensor& teacher_probs, int label,
               const KDLossConfig& cfg);

/// Tape form used by training: the student enters as logits (G uses a stable
/// log-sum-exp, H compares softmax outputs); teacher probabilities are
/// constants so no gradient path reaches them.
Tape::NodeId kd_loss_node(Tape& tape, Tape::NodeId student_logits,
                          const Tensor& teacher_probs, int label,
                          const KDLossConfig& cfg);

} // namespace skipopt
