#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icl/matrix.hpp"

namespace icl {

enum class Split { Train, Test };

struct ImageShape {
    std::size_t height = 0, width = 0, channels = 0;
    bool is_image() const { return height > 0; }
    std::size_t size() const { return height * width * channels; }
};

/// Samples are flat double vectors; image data is HWC-interleaved in
/// [0, 255]. Labels are global class ids.
struct Dataset {
    Split split = Split::Train;
    ImageShape shape;  // zero shape means plain feature vectors
    std::vector<std::vector<double>> inputs;
    std::vector<int> labels;

    std::size_t size() const { return inputs.size(); }
    std::size_t dim() const { return inputs.empty() ? 0 : inputs[0].size(); }
    std::vector<int> class_ids() const;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
};

struct ClassSplitPlan {
    std::vector<int> class_order;  // seeded shuffle of all class ids
    std::size_t step_size = 0;
    std::vector<std::vector<int>> batches;
};

/// Deterministic shuffle of class_ids by seed, then chunks of step_size
/// (last batch may be smaller). step_size > |classes| yields one batch.
ClassSplitPlan make_class_splits(std::vector<int> class_ids, std::size_t step_size,
                                 std::uint64_t seed);

enum class NormalizationMode { Div255MeanSub, MeanSubOnly, Standardize };

NormalizationMode parse_normalization_mode(const std::string& name);

struct NormalizationStats {
    NormalizationMode mode = NormalizationMode::Standardize;
    std::vector<double> mean;    // per-dimension, post pixel scaling
    std::vector<double> stddev;  // Standardize mode only
};

/// Statistics must come from the train split; anything else is rejected.
NormalizationStats compute_normalization(const Dataset& train, NormalizationMode mode);

void apply_normalization(Dataset& dataset, const NormalizationStats& stats);

/// Compute stats on train and apply them to both splits.
SplitDataset normalize(SplitDataset data, NormalizationMode mode);

/// Gaussian blobs: class means seeded and pairwise at least `separation`
/// apart, isotropic unit-variance samples, fixed train/test split.
SplitDataset synthetic_gaussian_dataset(std::size_t num_classes, std::size_t dim,
                                        std::size_t train_per_class,
                                        std::size_t test_per_class,
                                        double separation, std::uint64_t seed);

/// CIFAR-style binary batches: 3073-byte records, 1 label byte followed by
/// 3072 pixel bytes (1024 R, 1024 G, 1024 B, row-major 32x32 planes).
Dataset load_cifar_batches(const std::vector<std::string>& files, Split split);

/// CSV rows: label followed by feature columns. No header.
Dataset load_csv(const std::string& path, Split split);

}  // namespace icl
