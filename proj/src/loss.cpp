#include "icl/loss.hpp"

#include <cmath>

namespace icl {

Matrix softmax(const Matrix& logits) {
    Tape tape;
    auto x = tape.leaf(logits);
    return tape.value(tape.softmax_rows(x));
}

std::vector<double> soften(const std::vector<double>& dist, double temperature) {
    if (temperature <= 0.0)
        throw std::invalid_argument("soften: temperature must be > 0");
    double inv_t = 1.0 / temperature;
    std::vector<double> out(dist.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] < 0.0)
            throw NumericError("soften: negative probability entry");
        out[i] = std::pow(dist[i], inv_t);
        sum += out[i];
    }
    if (sum <= 0.0)
        throw NumericError("soften: all-zero distribution");
    for (double& v : out) v /= sum;
    return out;
}

Matrix soften_rows(const Matrix& probs, double temperature) {
    Matrix out(probs.rows(), probs.cols());
    std::vector<double> row(probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) row[j] = probs(i, j);
        auto soft = soften(row, temperature);
        for (std::size_t j = 0; j < probs.cols(); ++j) out(i, j) = soft[j];
    }
    return out;
}

void check_one_hot(const Matrix& targets) {
    for (std::size_t i = 0; i < targets.rows(); ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < targets.cols(); ++j) {
            double v = targets(i, j);
            if (v == 1.0) ++ones;
            else if (v != 0.0)
                throw std::invalid_argument("targets: row " + std::to_string(i) +
                                            " is not one-hot");
        }
        if (ones != 1)
            throw std::invalid_argument("targets: row " + std::to_string(i) +
                                        " is not one-hot");
    }
}

Tape::NodeId cross_entropy_node(Tape& tape, Tape::NodeId logits,
                                const Matrix& one_hot_targets) {
    const Matrix& lv = tape.value(logits);
    if (!lv.same_shape(one_hot_targets))
        throw DimensionError("cross_entropy: logits " + lv.shape() +
                             " vs targets " + one_hot_targets.shape());
    double n = static_cast<double>(lv.rows());
    auto q = tape.softmax_rows(logits);
    auto lq = tape.log_clamped(q);
    auto p = tape.leaf(one_hot_targets);
    auto prod = tape.mul_elem(p, lq);
    return tape.scale(tape.sum_all(prod), -1.0 / n);
}

Tape::NodeId distillation_node(Tape& tape, Tape::NodeId student_logits,
                               const Matrix& teacher_logits, double temperature) {
    const Matrix& sv = tape.value(student_logits);
    if (!sv.same_shape(teacher_logits))
        throw DimensionError("distillation: student " + sv.shape() +
                             " vs teacher " + teacher_logits.shape());
    double n = static_cast<double>(sv.rows());
    Matrix pdist = soften_rows(softmax(teacher_logits), temperature);
    auto qs = tape.softmax_rows(student_logits);
    auto qdist = tape.normalize_rows(tape.pow_elem(qs, 1.0 / temperature));
    auto lq = tape.log_clamped(qdist);
    auto p = tape.leaf(pdist);
    auto prod = tape.mul_elem(p, lq);
    return tape.scale(tape.sum_all(prod), -1.0 / n);
}

Tape::NodeId cross_distilled_node(Tape& tape,
                                  const std::vector<Tape::NodeId>& per_head_student_logits,
                                  Tape::NodeId concatenated_student_logits,
                                  const Matrix& one_hot_targets,
                                  const std::vector<Matrix>& teacher_logits_per_head,
                                  const LossConfig& config) {
    config.validate();
    if (teacher_logits_per_head.size() > per_head_student_logits.size())
        throw std::invalid_argument(
            "cross_distilled: " + std::to_string(teacher_logits_per_head.size()) +
            " distillation targets but only " +
            std::to_string(per_head_student_logits.size()) + " heads");
    auto total = cross_entropy_node(tape, concatenated_student_logits, one_hot_targets);
    for (std::size_t f = 0; f < teacher_logits_per_head.size(); ++f) {
        auto d = distillation_node(tape, per_head_student_logits[f],
                                   teacher_logits_per_head[f], config.temperature);
        total = tape.add(total, d);
    }
    return total;
}

double cross_entropy_loss(const Matrix& logits, const Matrix& one_hot_targets) {
    check_one_hot(one_hot_targets);
    Tape tape;
    auto l = tape.leaf(logits);
    return tape.scalar(cross_entropy_node(tape, l, one_hot_targets));
}

double distillation_loss(const Matrix& student_logits,
                         const Matrix& teacher_logits, double temperature) {
    Tape tape;
    auto s = tape.leaf(student_logits);
    return tape.scalar(distillation_node(tape, s, teacher_logits, temperature));
}

double cross_distilled_loss(const std::vector<Matrix>& per_head_student_logits,
                            const Matrix& concatenated_student_logits,
                            const Matrix& one_hot_targets,
                            const std::vector<Matrix>& teacher_logits_per_head,
                            const LossConfig& config) {
    Tape tape;
    std::vector<Tape::NodeId> heads;
    heads.reserve(per_head_student_logits.size());
    for (const Matrix& m : per_head_student_logits) heads.push_back(tape.leaf(m));
    auto concat = tape.leaf(concatenated_student_logits);
    return tape.scalar(cross_distilled_node(tape, heads, concat, one_hot_targets,
                                            teacher_logits_per_head, config));
}

}  // namespace icl
