#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/pipeline.hpp"

namespace icl {

struct DatasetSpec {
    std::string type = "synthetic";  // synthetic | cifar-binary | csv
    // synthetic
    std::size_t classes = 10;
    std::size_t dim = 16;
    std::size_t train_per_class = 100;
    std::size_t test_per_class = 30;
    double separation = 6.0;
    std::uint64_t seed = 7;
    // file-backed
    std::vector<std::string> train_files;
    std::vector<std::string> test_files;
    std::string normalization = "standardize";
};

/// Declarative experiment description. Parsing is strict: unknown keys are
/// rejected with the offending path.
struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<std::size_t> extractor_hidden{32, 16};
    std::size_t step_size = 2;

    std::string memory_mode = "fixed-total";  // or fixed-per-class
    std::size_t memory_budget = 100;          // K or m
    std::string selection = "herding";
    std::uint64_t selection_seed = 0;

    double temperature = 2.0;
    OptimizerConfig optimizer;
    std::size_t main_epochs = 40;
    std::size_t finetune_epochs = 30;
    double finetune_lr = 0.01;

    std::string augment_recipe = "vector";
    double jitter_scale = 0.1;
    std::size_t jitter_copies = 1;
    std::size_t crop_pad = 4;

    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    bool disable_augmentation = false;
    bool disable_finetune = false;
    bool disable_memory = false;
    bool disable_distillation = false;
    bool run_upper_bound = false;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
    void save(const std::string& path) const;

    /// Schema is enforced by from_json; this adds semantic checks and
    /// returns human-readable warnings (e.g. budget smaller than the
    /// class count in fixed-total mode).
    std::vector<std::string> validate() const;

    std::string digest() const;  // FNV-1a over the canonical serialization

    MemoryMode memory_mode_enum() const;
    PipelineConfig pipeline_config() const;
    SplitDataset build_dataset() const;
};

}  // namespace icl
