#pragma once

#include <vector>

#include "icl/autodiff.hpp"
#include "icl/matrix.hpp"

namespace icl {

struct LossConfig {
    double temperature = 2.0;  // T; Eq. weighting is a fixed unweighted sum

    void validate() const {
        if (temperature <= 0.0)
            throw std::invalid_argument("LossConfig: temperature must be > 0");
    }
};

/// Row-wise softmax with max-subtraction.
Matrix softmax(const Matrix& logits);

/// Temperature-soften a probability vector: d_j^(1/T), renormalized.
/// Throws NumericError on an all-zero vector.
std::vector<double> soften(const std::vector<double>& dist, double temperature);

/// soften() applied to each row of a matrix of probability rows.
Matrix soften_rows(const Matrix& probs, double temperature);

/// -(1/N) sum_ij p_ij log q_ij with q = softmax(logits); log arg clamped
/// below at 1e-12. targets rows must be one-hot.
double cross_entropy_loss(const Matrix& logits, const Matrix& one_hot_targets);

/// -(1/N) sum_ij pdist_ij log qdist_ij, pdist/qdist the temperature-softened
/// softmaxes of teacher and student logits.
double distillation_loss(const Matrix& student_logits,
                         const Matrix& teacher_logits, double temperature);

// Tape-recorded variants: same math with gradient flow through the
// student logits. Targets and teacher logits are constants.

Tape::NodeId cross_entropy_node(Tape& tape, Tape::NodeId logits,
                                const Matrix& one_hot_targets);

Tape::NodeId distillation_node(Tape& tape, Tape::NodeId student_logits,
                               const Matrix& teacher_logits, double temperature);

/// Eq.-1 style sum: cross-entropy over the concatenated logits plus one
/// distillation term per entry of teacher_logits_per_head, paired with
/// per_head_student_logits[0..F-1]. F may be at most the head count.
Tape::NodeId cross_distilled_node(Tape& tape,
                                  const std::vector<Tape::NodeId>& per_head_student_logits,
                                  Tape::NodeId concatenated_student_logits,
                                  const Matrix& one_hot_targets,
                                  const std::vector<Matrix>& teacher_logits_per_head,
                                  const LossConfig& config);

/// Value-only evaluation of the cross-distilled loss.
double cross_distilled_loss(const std::vector<Matrix>& per_head_student_logits,
                            const Matrix& concatenated_student_logits,
                            const Matrix& one_hot_targets,
                            const std::vector<Matrix>& teacher_logits_per_head,
                            const LossConfig& config);

void check_one_hot(const Matrix& targets);

}  // namespace icl
