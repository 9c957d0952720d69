#pragma once

// Shared helpers for the test suites: random small nets with cross-distilled
// losses and a central finite-difference gradient oracle. The oracle only
// uses value-level forward evaluation and stays independent of the tape's
// backward pass.

#include <algorithm>
#include <cmath>
#include <random>

#include "icl/loss.hpp"
#include "icl/model.hpp"
#include "icl/pipeline.hpp"

namespace icltest {

using namespace icl;

struct LossProblem {
    IncrementalNet net;
    Matrix batch{1, 1};
    Matrix one_hot{1, 1};
    std::vector<Matrix> teachers;  // distillation targets, heads 0..F-1
    LossConfig cfg;
};

inline double eval_loss(const LossProblem& p) {
    ForwardResult fr = p.net.forward(p.batch);
    return cross_distilled_loss(fr.per_head, fr.concatenated, p.one_hot, p.teachers,
                                p.cfg);
}

inline GradientMap analytic_grads(const LossProblem& p) {
    Tape tape;
    TapeForward tf = p.net.forward_on_tape(tape, p.batch);
    auto root = cross_distilled_node(tape, tf.per_head, tf.concatenated, p.one_hot,
                                     p.teachers, p.cfg);
    tape.backward(root);
    GradientMap g;
    for (const auto& [name, id] : tf.param_nodes) g[name] = tape.grad(id);
    return g;
}

/// Worst per-parameter relative error between analytic gradients and
/// central finite differences (step h, absolute floor 1e-4).
inline double max_fd_rel_error(LossProblem p, double h = 1e-5) {
    GradientMap grads = analytic_grads(p);
    double worst = 0.0;
    for (const auto& name : p.net.params().names()) {
        Matrix& m = p.net.params().at(name);
        const Matrix& ga = grads.at(name);
        for (std::size_t i = 0; i < m.size(); ++i) {
            double orig = m[i];
            m[i] = orig + h;
            double lp = eval_loss(p);
            m[i] = orig - h;
            double lm = eval_loss(p);
            m[i] = orig;
            double fd = (lp - lm) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(ga[i]), 1e-4});
            worst = std::max(worst, std::abs(fd - ga[i]) / denom);
        }
    }
    return worst;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = gauss(rng);
    return m;
}

/// Random net with old_heads+1 heads and a cross-distilled loss fixture.
inline LossProblem random_problem(std::uint64_t seed, std::size_t old_heads,
                                  double temperature) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim_pick(3, 6);
    std::uniform_int_distribution<std::size_t> cls_pick(2, 3);

    LossProblem p;
    std::size_t input_dim = dim_pick(rng);
    p.net = IncrementalNet(MlpSpec{input_dim, {dim_pick(rng), dim_pick(rng)}}, rng);
    int next_class = 0;
    for (std::size_t h = 0; h <= old_heads; ++h) {
        std::vector<int> ids;
        for (std::size_t c = cls_pick(rng); c-- > 0;) ids.push_back(next_class++);
        p.net.add_classification_head(ids, rng);
    }
    // Freshly built nets have exactly-zero biases, so a fully inactive relu
    // row can park the next layer's pre-activation exactly on the kink where
    // finite differences and the subgradient legitimately disagree. Jitter
    // every parameter so the fixture stays away from that measure-zero set.
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (const auto& name : p.net.params().names())
        for (double& v : p.net.params().at(name).data()) v += jitter(rng);
    std::size_t batch = dim_pick(rng);
    p.batch = random_matrix(batch, input_dim, rng);
    p.one_hot = Matrix(batch, p.net.total_classes());
    std::uniform_int_distribution<std::size_t> col_pick(0, p.net.total_classes() - 1);
    for (std::size_t i = 0; i < batch; ++i) p.one_hot(i, col_pick(rng)) = 1.0;
    for (std::size_t f = 0; f < old_heads; ++f)
        p.teachers.push_back(
            random_matrix(batch, p.net.heads()[f].class_ids.size(), rng));
    p.cfg.temperature = temperature;
    return p;
}

}  // namespace icltest
