#include "icl/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace icl {

namespace {

Matrix to_matrix(const std::vector<const std::vector<double>*>& rows) {
    Matrix m(rows.size(), rows[0]->size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i]->size(); ++j)
            m(i, j) = (*rows[i])[j];
    return m;
}

Matrix samples_matrix(const std::vector<StoredSample>& samples) {
    std::vector<const std::vector<double>*> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(&s.input);
    return to_matrix(rows);
}

/// Attach teacher logits (one vector per old head) to every sample.
void attach_distill_labels(DualLabeledSet& set, const TeacherSnapshot& teacher) {
    if (set.samples.empty()) return;
    std::vector<const std::vector<double>*> rows;
    rows.reserve(set.samples.size());
    for (const auto& s : set.samples) rows.push_back(&s.input);
    auto logits = teacher.teacher_logits(to_matrix(rows));
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        auto& d = set.samples[i].distill;
        d.clear();
        for (const Matrix& head : logits) {
            std::vector<double> v(head.cols());
            for (std::size_t j = 0; j < head.cols(); ++j) v[j] = head(i, j);
            d.push_back(std::move(v));
        }
    }
    set.distill_head_count = logits.size();
}

void append_sample(DualLabeledSet& set, std::vector<double> input, int class_id,
                   bool is_exemplar, const AugmentConfig* augment,
                   const ImageShape& shape, std::mt19937_64& rng) {
    if (augment) {
        for (auto& variant : augment_recipe(input, shape, *augment, rng)) {
            DualLabeledSample s;
            s.input = std::move(variant);
            s.class_id = class_id;
            s.is_exemplar = is_exemplar;
            set.samples.push_back(std::move(s));
        }
    }
    DualLabeledSample s;
    s.input = std::move(input);
    s.class_id = class_id;
    s.is_exemplar = is_exemplar;
    set.samples.push_back(std::move(s));
}

}  // namespace

std::map<int, std::vector<StoredSample>> collect_class_samples(
    const Dataset& train_set, const std::vector<int>& class_ids) {
    std::map<int, std::vector<StoredSample>> out;
    for (int c : class_ids) out[c];
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        auto it = out.find(train_set.labels[i]);
        if (it != out.end())
            it->second.push_back(StoredSample{static_cast<long>(i), train_set.inputs[i]});
    }
    return out;
}

std::vector<std::vector<double>> extract_features(const IncrementalNet& net,
                                                  const std::vector<StoredSample>& samples) {
    if (samples.empty()) return {};
    ForwardResult fr = net.forward(samples_matrix(samples));
    std::vector<std::vector<double>> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[i].resize(fr.features.cols());
        for (std::size_t j = 0; j < fr.features.cols(); ++j)
            out[i][j] = fr.features(i, j);
    }
    return out;
}

DualLabeledSet build_training_set(const RepresentativeMemory* memory,
                                  const std::map<int, std::vector<StoredSample>>& new_class_data,
                                  const TeacherSnapshot* teacher,
                                  const AugmentConfig* augment,
                                  const ImageShape& shape,
                                  std::mt19937_64& rng) {
    if (new_class_data.empty())
        throw std::invalid_argument("build_training_set: no new-class data");
    for (const auto& [c, samples] : new_class_data)
        if (samples.empty())
            throw std::invalid_argument("build_training_set: class " +
                                        std::to_string(c) + " has no samples");
    DualLabeledSet set;
    if (memory)
        for (const auto& [c, exemplars] : memory->store())
            for (const auto& e : exemplars)
                append_sample(set, e.input, c, true, augment, shape, rng);
    for (const auto& [c, samples] : new_class_data)
        for (const auto& s : samples)
            append_sample(set, s.input, c, false, augment, shape, rng);

    if (teacher)
        attach_distill_labels(set, *teacher);
    return set;
}

TrainTrace train(IncrementalNet& net, const DualLabeledSet& set,
                 const OptimizerConfig& optimizer, std::size_t epochs,
                 const LossConfig& loss, std::mt19937_64& rng) {
    optimizer.validate();
    loss.validate();
    if (set.samples.empty())
        throw std::invalid_argument("train: empty training set");
    // f may be 0 (no distillation), heads-1 (main training) or heads
    // (balanced fine-tuning's temporary term).
    std::size_t f = set.distill_head_count;
    std::size_t heads = net.heads().size();
    if (f != 0 && f != heads - 1 && f != heads)
        throw ConfigError("train: " + std::to_string(f) + " distillation labels for " +
                          std::to_string(heads) + " heads");
    for (const auto& s : set.samples)
        if (s.distill.size() != f)
            throw ConfigError("train: inconsistent distillation label count");

    // Each training phase gets a fresh optimizer: carrying velocity across
    // phases would make checkpointed model state insufficient for resuming.
    net.params().reset_momentum();

    auto col_of = net.class_to_column();
    std::size_t total_classes = net.total_classes();
    TrainTrace trace;
    std::vector<std::size_t> order(set.samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += optimizer.batch_size) {
            std::size_t end = std::min(start + optimizer.batch_size, order.size());
            std::size_t n = end - start;

            Matrix batch(n, set.samples[0].input.size());
            Matrix one_hot(n, total_classes);
            std::vector<Matrix> teachers;
            for (std::size_t h = 0; h < f; ++h)
                teachers.emplace_back(n, net.heads()[h].class_ids.size());
            for (std::size_t r = 0; r < n; ++r) {
                const auto& s = set.samples[order[start + r]];
                for (std::size_t j = 0; j < s.input.size(); ++j) batch(r, j) = s.input[j];
                auto cit = col_of.find(s.class_id);
                if (cit == col_of.end())
                    throw ConfigError("train: sample class " + std::to_string(s.class_id) +
                                      " has no head");
                one_hot(r, cit->second) = 1.0;
                for (std::size_t h = 0; h < f; ++h) {
                    if (s.distill[h].size() != teachers[h].cols())
                        throw ConfigError("train: distillation label width mismatch");
                    for (std::size_t j = 0; j < teachers[h].cols(); ++j)
                        teachers[h](r, j) = s.distill[h][j];
                }
            }

            Tape tape;
            TapeForward tf = net.forward_on_tape(tape, batch);
            auto root = cross_distilled_node(tape, tf.per_head, tf.concatenated,
                                             one_hot, teachers, loss);
            double value = tape.scalar(root);
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "train: loss diverged at epoch " << epoch << " (trace:";
                for (double l : trace.epoch_mean_loss) msg << " " << l;
                msg << ")";
                throw NumericError(msg.str());
            }
            tape.backward(root);
            GradientMap grads;
            for (const auto& [name, node] : tf.param_nodes)
                grads[name] = tape.grad(node);
            sgd_step(net.params(), grads, optimizer, epoch, rng);
            loss_sum += value;
            ++batches;
        }
        trace.epoch_mean_loss.push_back(loss_sum / static_cast<double>(batches));
    }
    return trace;
}

std::map<int, std::vector<StoredSample>> build_balanced_subset(
    const IncrementalNet& net,
    const std::map<int, std::vector<StoredSample>>& new_class_data,
    const RepresentativeMemory& memory, std::size_t per_class_n) {
    std::map<int, std::vector<StoredSample>> subset;
    for (const auto& [c, exemplars] : memory.store()) {
        if (exemplars.empty())
            throw ConfigError("balanced_finetune: stored class " + std::to_string(c) +
                              " has no exemplars");
        std::size_t take = std::min(per_class_n, exemplars.size());
        subset[c].assign(exemplars.begin(), exemplars.begin() + take);
    }
    SelectionStrategy herding;  // defaults to Kind::Herding
    for (const auto& [c, samples] : new_class_data) {
        if (samples.empty())
            throw ConfigError("balanced_finetune: new class " + std::to_string(c) +
                              " has no samples");
        auto features = extract_features(net, samples);
        subset[c] = select_exemplars(samples, features, per_class_n, herding);
    }
    return subset;
}

TrainTrace balanced_finetune(IncrementalNet& net,
                             const std::map<int, std::vector<StoredSample>>& new_class_data,
                             const RepresentativeMemory& memory,
                             const TeacherSnapshot* step_teacher,
                             std::size_t per_class_n,
                             const OptimizerConfig& optimizer, std::size_t epochs,
                             double finetune_lr, const LossConfig& loss,
                             const AugmentConfig* augment, const ImageShape& shape,
                             std::mt19937_64& rng) {
    if (epochs == 0) return {};
    if (per_class_n == 0)
        throw ConfigError("balanced_finetune: per-class budget is zero");

    DualLabeledSet set;
    auto subset = build_balanced_subset(net, new_class_data, memory, per_class_n);
    for (const auto& [c, samples] : subset) {
        bool is_exemplar = memory.has_class(c);
        for (const auto& s : samples)
            append_sample(set, s.input, c, is_exemplar, augment, shape, rng);
    }

    // Distillation targets: old heads from the step teacher, the new head
    // from the net as it stands after the main training stage.
    std::vector<const std::vector<double>*> rows;
    for (const auto& s : set.samples) rows.push_back(&s.input);
    Matrix batch = to_matrix(rows);
    std::vector<Matrix> targets;
    if (step_teacher) {
        targets = step_teacher->teacher_logits(batch);
        if (targets.size() + 1 != net.heads().size())
            throw ConfigError("balanced_finetune: teacher head count mismatch");
    }
    ForwardResult now = net.forward(batch);
    targets.push_back(now.per_head.back());
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        auto& d = set.samples[i].distill;
        d.clear();
        for (const Matrix& head : targets) {
            std::vector<double> v(head.cols());
            for (std::size_t j = 0; j < head.cols(); ++j) v[j] = head(i, j);
            d.push_back(std::move(v));
        }
    }
    set.distill_head_count = targets.size();

    OptimizerConfig ft = optimizer;
    ft.base_lr = finetune_lr;
    return train(net, set, ft, epochs, loss, rng);
}

StepMetrics incremental_step(IncrementalState& state,
                             const std::vector<int>& new_class_ids,
                             const Dataset& train_set, const Dataset& test_set,
                             const PipelineConfig& config) {
    bool first_step = state.net.heads().empty();
    state.net.add_classification_head(new_class_ids, state.rng);

    std::optional<TeacherSnapshot> teacher;
    if (!first_step)
        teacher.emplace(state.net, state.net.heads().size() - 1);

    auto new_class_data = collect_class_samples(train_set, new_class_ids);
    const AugmentConfig* augment =
        config.disable_augmentation ? nullptr : &config.augment;
    const RepresentativeMemory* memory =
        config.disable_memory ? nullptr : &state.memory;
    const TeacherSnapshot* distill_teacher =
        (config.disable_distillation || !teacher) ? nullptr : &*teacher;

    DualLabeledSet set = build_training_set(memory, new_class_data, distill_teacher,
                                            augment, train_set.shape, state.rng);
    train(state.net, set, config.optimizer, config.main_epochs, config.loss, state.rng);

    // Fine-tuning needs stored old-class samples to balance against; the
    // first step is balanced by construction.
    if (!first_step && !config.disable_finetune && !config.disable_memory) {
        std::size_t n = state.memory.per_class_budget(state.net.total_classes());
        if (n > 0)
            balanced_finetune(state.net, new_class_data, state.memory, distill_teacher,
                              n, config.optimizer, config.finetune_epochs,
                              config.finetune_lr, config.loss, augment,
                              train_set.shape, state.rng);
    }

    if (!config.disable_memory) {
        std::map<int, std::vector<std::vector<double>>> features;
        for (const auto& [c, samples] : new_class_data)
            features[c] = extract_features(state.net, samples);
        state.memory.update_memory(new_class_data, features, config.selection);
    }

    // Evaluate on the test samples of all seen classes.
    auto col_of = state.net.class_to_column();
    Dataset seen_test;
    seen_test.split = Split::Test;
    seen_test.shape = test_set.shape;
    for (std::size_t i = 0; i < test_set.size(); ++i)
        if (col_of.count(test_set.labels[i])) {
            seen_test.inputs.push_back(test_set.inputs[i]);
            seen_test.labels.push_back(test_set.labels[i]);
        }
    StepMetrics metrics = evaluate_accuracy(state.net, seen_test, new_class_ids);
    metrics.step_index = state.step_index;
    state.history.push_back(metrics);
    ++state.step_index;
    return metrics;
}

}  // namespace icl
