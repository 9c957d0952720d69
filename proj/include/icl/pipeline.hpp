#pragma once

#include <map>
#include <optional>
#include <random>
#include <vector>

#include "icl/augment.hpp"
#include "icl/dataset.hpp"
#include "icl/evaluation.hpp"
#include "icl/loss.hpp"
#include "icl/memory.hpp"
#include "icl/model.hpp"
#include "icl/optimizer.hpp"

namespace icl {

struct DualLabeledSample {
    std::vector<double> input;
    int class_id = -1;
    std::vector<std::vector<double>> distill;  // one teacher-logit vector per head
    bool is_exemplar = false;
};

struct DualLabeledSet {
    std::vector<DualLabeledSample> samples;
    std::size_t distill_head_count = 0;  // F
};

struct PipelineConfig {
    OptimizerConfig optimizer;
    LossConfig loss;
    std::size_t main_epochs = 40;
    std::size_t finetune_epochs = 30;
    double finetune_lr = 0.01;
    AugmentConfig augment;
    SelectionStrategy selection;
    bool disable_augmentation = false;
    bool disable_finetune = false;
    bool disable_memory = false;
    bool disable_distillation = false;
};

struct IncrementalState {
    IncrementalNet net;
    RepresentativeMemory memory;
    std::size_t step_index = 0;
    std::mt19937_64 rng;
    std::vector<StepMetrics> history;
};

struct TrainTrace {
    std::vector<double> epoch_mean_loss;
};

/// Exemplars plus new-class samples, optionally augmented, each carrying a
/// classification label and one teacher-logit vector per old head. teacher
/// may be null (first step or distillation disabled) giving F = 0.
DualLabeledSet build_training_set(const RepresentativeMemory* memory,
                                  const std::map<int, std::vector<StoredSample>>& new_class_data,
                                  const TeacherSnapshot* teacher,
                                  const AugmentConfig* augment,
                                  const ImageShape& shape,
                                  std::mt19937_64& rng);

/// Mini-batch SGD on the cross-distilled loss; all parameters update.
/// Throws NumericError with the loss trace attached if the loss diverges.
TrainTrace train(IncrementalNet& net, const DualLabeledSet& set,
                 const OptimizerConfig& optimizer, std::size_t epochs,
                 const LossConfig& loss, std::mt19937_64& rng);

/// Equal per-class raw subset: exemplar prefixes for stored classes,
/// herding-selected representatives (features from the current extractor)
/// for new classes. Classes with fewer than n samples keep what they have.
std::map<int, std::vector<StoredSample>> build_balanced_subset(
    const IncrementalNet& net,
    const std::map<int, std::vector<StoredSample>>& new_class_data,
    const RepresentativeMemory& memory, std::size_t per_class_n);

/// Balanced fine-tuning: equal per-class subset (old-class exemplars,
/// herding-selected new-class samples), a temporary distillation term on
/// the new head, low starting learning rate.
TrainTrace balanced_finetune(IncrementalNet& net,
                             const std::map<int, std::vector<StoredSample>>& new_class_data,
                             const RepresentativeMemory& memory,
                             const TeacherSnapshot* step_teacher,
                             std::size_t per_class_n,
                             const OptimizerConfig& optimizer, std::size_t epochs,
                             double finetune_lr, const LossConfig& loss,
                             const AugmentConfig* augment, const ImageShape& shape,
                             std::mt19937_64& rng);

/// One full incremental step: snapshot teacher + add head, build the
/// training set, train, balanced fine-tuning, memory update, evaluation.
StepMetrics incremental_step(IncrementalState& state,
                             const std::vector<int>& new_class_ids,
                             const Dataset& train_set, const Dataset& test_set,
                             const PipelineConfig& config);

/// Group train samples of the given classes, keyed by class, preserving
/// dataset order; ids are dataset indices.
std::map<int, std::vector<StoredSample>> collect_class_samples(
    const Dataset& train_set, const std::vector<int>& class_ids);

/// Extractor features for each sample, aligned with the input list.
std::vector<std::vector<double>> extract_features(const IncrementalNet& net,
                                                  const std::vector<StoredSample>& samples);

}  // namespace icl
