#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/dataset.hpp"
#include "icl/model.hpp"

namespace icl {

struct ClassCount {
    std::size_t correct = 0;
    std::size_t total = 0;
};

struct StepMetrics {
    std::size_t step_index = 0;
    std::size_t seen_class_count = 0;
    double overall_accuracy = 0.0;
    double old_class_accuracy = 0.0;  // classes from earlier steps; 0 at step 0
    double new_class_accuracy = 0.0;
    double task_aware_accuracy = 0.0;
    std::map<int, ClassCount> per_class;

    nlohmann::json to_json() const;
    static StepMetrics from_json(const nlohmann::json& j);
};

/// Multi-class accuracy by argmax over the concatenated softmax scores.
/// Test labels outside the seen classes raise DataError. new_classes marks
/// this step's batch for the old/new breakdown.
StepMetrics evaluate_accuracy(const IncrementalNet& net, const Dataset& test_set,
                              const std::vector<int>& new_classes);

/// Mean of entries 1..end; the first (non-incremental) step is excluded.
/// Throws on fewer than two steps.
double average_incremental_accuracy(const std::vector<double>& step_accuracies);

/// Argmax restricted to the classes of the sample's own head.
double task_aware_accuracy(const IncrementalNet& net, const Dataset& test_set,
                           const std::map<int, std::size_t>& task_of_class);

struct RunReport {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<StepMetrics> steps;
    double average_incremental = 0.0;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
    static RunReport from_json(const nlohmann::json& j);
};

struct AggregateReport {
    std::vector<RunReport> runs;
    std::vector<double> step_mean;  // per step over runs
    std::vector<double> step_std;   // population standard deviation
    std::vector<std::size_t> classes_seen;
    double mean_average_incremental = 0.0;
    double upper_bound_accuracy = -1.0;  // < 0 when not run

    nlohmann::json to_json() const;
    static AggregateReport from_json(const nlohmann::json& j);
    std::string curves_csv() const;  // step,classes_seen,mean_acc,std_acc
};

/// Recompute the per-step mean/std and the averaged incremental accuracy
/// from the raw per-run reports.
AggregateReport aggregate_runs(std::vector<RunReport> runs, double upper_bound = -1.0);

}  // namespace icl
