#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/autodiff.hpp"
#include "icl/matrix.hpp"
#include "icl/optimizer.hpp"

namespace icl {

struct MlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_sizes;

    std::size_t feature_dim() const {
        return hidden_sizes.empty() ? input_dim : hidden_sizes.back();
    }
};

struct HeadSpec {
    std::vector<int> class_ids;  // global ids, disjoint across heads
};

struct ForwardResult {
    Matrix features;
    std::vector<Matrix> per_head;
    Matrix concatenated;
};

/// Node handles for a tape-recorded forward pass, including the leaf id
/// of every parameter so gradients can be collected after backward().
struct TapeForward {
    Tape::NodeId features = 0;
    std::vector<Tape::NodeId> per_head;
    Tape::NodeId concatenated = 0;
    std::map<std::string, Tape::NodeId> param_nodes;
};

/// Shared MLP feature extractor plus an ordered list of classification
/// heads, one per incremental batch of classes.
class IncrementalNet {
public:
    IncrementalNet() = default;
    IncrementalNet(MlpSpec spec, std::mt19937_64& rng);

    const MlpSpec& spec() const { return spec_; }
    const std::vector<HeadSpec>& heads() const { return heads_; }
    std::size_t feature_dim() const { return spec_.feature_dim(); }
    std::size_t total_classes() const;

    /// Global class ids in concatenated-logit column order.
    std::vector<int> seen_classes() const;
    std::map<int, std::size_t> class_to_column() const;
    std::map<int, std::size_t> class_to_head() const;

    /// Appends a head for new_class_ids; the extractor and every existing
    /// head are left bit-identical. Throws ConfigError on overlap.
    void add_classification_head(const std::vector<int>& new_class_ids,
                                 std::mt19937_64& rng);

    /// Plain forward pass: features, per-head logits and their
    /// concatenation in head order. Throws ConfigError with no heads.
    ForwardResult forward(const Matrix& batch) const;

    /// Forward pass recorded on a tape for training.
    TapeForward forward_on_tape(Tape& tape, const Matrix& batch) const;

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    std::vector<std::string> extractor_param_names() const;

    nlohmann::json to_json() const;
    static IncrementalNet from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static IncrementalNet load(const std::string& path);

private:
    MlpSpec spec_;
    std::vector<HeadSpec> heads_;
    ParameterSet params_;
};

/// Frozen copy of a net taken at the start of an incremental step; serves
/// distillation targets for the heads that existed before the step.
class TeacherSnapshot {
public:
    TeacherSnapshot(const IncrementalNet& net, std::size_t old_head_count);

    std::size_t old_head_count() const { return old_heads_; }
    const IncrementalNet& net() const { return frozen_; }

    /// Logits of the old heads only, computed with the frozen parameters.
    std::vector<Matrix> teacher_logits(const Matrix& batch) const;

private:
    IncrementalNet frozen_;
    std::size_t old_heads_;
};

}  // namespace icl
