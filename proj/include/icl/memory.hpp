#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/matrix.hpp"

namespace icl {

enum class MemoryMode { FixedTotal, FixedPerClass };

struct SelectionStrategy {
    enum class Kind { Herding, Random, Histogram, NearestMeanSort };
    Kind kind = Kind::Herding;
    std::uint64_t seed = 0;  // used by Random only
    int histogram_bins = 10;

    std::string name() const;
    static SelectionStrategy parse(const std::string& name, std::uint64_t seed);
};

struct StoredSample {
    long id = -1;  // identifier in the source dataset
    std::vector<double> input;
};

/// Greedy mean-matching order: at step k pick the sample minimizing the
/// distance between the running prefix mean and the class mean. Ties go
/// to the lowest index. Returns a permutation of all indices.
std::vector<std::size_t> herding_order(const std::vector<std::vector<double>>& features,
                                       const std::vector<double>& class_mean);

/// Distances to the mean bucketed into equal-width bins; samples drawn
/// round-robin proportionally to bin occupancy (largest-remainder rule,
/// ties to the lowest bin, input order within a bin).
std::vector<std::size_t> histogram_order(const std::vector<std::vector<double>>& features,
                                         const std::vector<double>& class_mean,
                                         int bins = 10);

/// Plain sort by distance to the class mean, closest first.
std::vector<std::size_t> nearest_mean_order(const std::vector<std::vector<double>>& features,
                                            const std::vector<double>& class_mean);

std::vector<std::size_t> random_order(std::size_t count, std::uint64_t seed);

std::vector<std::size_t> strategy_order(const std::vector<std::vector<double>>& features,
                                        const SelectionStrategy& strategy);

std::vector<double> feature_mean(const std::vector<std::vector<double>>& features);

/// Per-class exemplar store under a fixed-total (K) or fixed-per-class (m)
/// budget. Lists are kept most-representative-first; reductions always
/// truncate from the tail.
class RepresentativeMemory {
public:
    RepresentativeMemory() = default;
    RepresentativeMemory(MemoryMode mode, std::size_t budget);

    MemoryMode mode() const { return mode_; }
    std::size_t budget() const { return budget_; }

    /// Samples per class given c total stored classes: floor(K/c) in
    /// fixed-total mode, m in fixed-per-class mode.
    std::size_t per_class_budget(std::size_t total_classes) const;

    std::size_t class_count() const { return store_.size(); }
    std::size_t total_stored() const;
    bool has_class(int class_id) const { return store_.count(class_id) != 0; }
    const std::vector<StoredSample>& exemplars(int class_id) const;
    const std::map<int, std::vector<StoredSample>>& store() const { return store_; }

    /// Truncate every class list to its first n entries.
    void reduce_exemplars(std::size_t n);

    /// Reduce to the new per-class budget, then select exemplars for each
    /// new class with the given strategy. sample_ids/samples/features are
    /// aligned 1:1 per class.
    void update_memory(const std::map<int, std::vector<StoredSample>>& new_classes,
                       const std::map<int, std::vector<std::vector<double>>>& features,
                       const SelectionStrategy& strategy);

    nlohmann::json manifest(const SelectionStrategy& strategy) const;
    void save_manifest(const std::string& path, const SelectionStrategy& strategy) const;
    static RepresentativeMemory from_manifest(const nlohmann::json& j);
    static RepresentativeMemory load_manifest(const std::string& path);

private:
    MemoryMode mode_ = MemoryMode::FixedTotal;
    std::size_t budget_ = 0;
    std::map<int, std::vector<StoredSample>> store_;
};

/// First n entries of the strategy's order over one class's samples.
std::vector<StoredSample> select_exemplars(const std::vector<StoredSample>& class_samples,
                                           const std::vector<std::vector<double>>& features,
                                           std::size_t n,
                                           const SelectionStrategy& strategy);

}  // namespace icl
