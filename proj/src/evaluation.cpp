#include "icl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "icl/loss.hpp"

namespace icl {

namespace {

Matrix batch_matrix(const Dataset& ds) {
    Matrix m(ds.size(), ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.dim(); ++j)
            m(i, j) = ds.inputs[i][j];
    return m;
}

}  // namespace

StepMetrics evaluate_accuracy(const IncrementalNet& net, const Dataset& test_set,
                              const std::vector<int>& new_classes) {
    if (test_set.size() == 0)
        throw DataError("evaluate_accuracy: empty test set");
    auto col_of = net.class_to_column();
    for (int label : test_set.labels)
        if (!col_of.count(label))
            throw DataError("evaluate_accuracy: label " + std::to_string(label) +
                            " has not been trained");

    ForwardResult fr = net.forward(batch_matrix(test_set));
    const Matrix& logits = fr.concatenated;
    std::vector<int> column_class(net.total_classes());
    for (const auto& [cls, col] : col_of) column_class[col] = cls;

    StepMetrics m;
    m.seen_class_count = net.total_classes();
    std::set<int> new_set(new_classes.begin(), new_classes.end());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        int label = test_set.labels[i];
        bool ok = column_class[best] == label;
        auto& cc = m.per_class[label];
        ++cc.total;
        if (ok) { ++cc.correct; ++correct; }
    }
    m.overall_accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());

    std::size_t old_c = 0, old_t = 0, new_c = 0, new_t = 0;
    for (const auto& [cls, cc] : m.per_class) {
        if (new_set.count(cls)) { new_c += cc.correct; new_t += cc.total; }
        else { old_c += cc.correct; old_t += cc.total; }
    }
    m.old_class_accuracy = old_t ? static_cast<double>(old_c) / old_t : 0.0;
    m.new_class_accuracy = new_t ? static_cast<double>(new_c) / new_t : 0.0;
    m.task_aware_accuracy = task_aware_accuracy(net, test_set, net.class_to_head());
    return m;
}

double average_incremental_accuracy(const std::vector<double>& step_accuracies) {
    if (step_accuracies.size() < 2)
        throw std::invalid_argument(
            "average_incremental_accuracy: needs at least two steps");
    double sum = 0.0;
    for (std::size_t i = 1; i < step_accuracies.size(); ++i) sum += step_accuracies[i];
    return sum / static_cast<double>(step_accuracies.size() - 1);
}

double task_aware_accuracy(const IncrementalNet& net, const Dataset& test_set,
                           const std::map<int, std::size_t>& task_of_class) {
    if (test_set.size() == 0)
        throw DataError("task_aware_accuracy: empty test set");
    auto col_of = net.class_to_column();
    ForwardResult fr = net.forward(batch_matrix(test_set));

    // Column span per head in the concatenated logits.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t off = 0;
    for (const auto& h : net.heads()) {
        spans.emplace_back(off, off + h.class_ids.size());
        off += h.class_ids.size();
    }
    std::vector<int> column_class(net.total_classes());
    for (const auto& [cls, col] : col_of) column_class[col] = cls;

    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        int label = test_set.labels[i];
        auto it = task_of_class.find(label);
        if (it == task_of_class.end() || it->second >= spans.size())
            throw DataError("task_aware_accuracy: class " + std::to_string(label) +
                            " is not mapped to a task");
        auto [lo, hi] = spans[it->second];
        std::size_t best = lo;
        for (std::size_t j = lo + 1; j < hi; ++j)
            if (fr.concatenated(i, j) > fr.concatenated(i, best)) best = j;
        if (column_class[best] == label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

nlohmann::json StepMetrics::to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [cls, cc] : per_class)
        per[std::to_string(cls)] = {{"correct", cc.correct}, {"total", cc.total}};
    return {{"step_index", step_index},
            {"seen_class_count", seen_class_count},
            {"overall_accuracy", overall_accuracy},
            {"old_class_accuracy", old_class_accuracy},
            {"new_class_accuracy", new_class_accuracy},
            {"task_aware_accuracy", task_aware_accuracy},
            {"per_class", per}};
}

StepMetrics StepMetrics::from_json(const nlohmann::json& j) {
    StepMetrics m;
    m.step_index = j.at("step_index").get<std::size_t>();
    m.seen_class_count = j.at("seen_class_count").get<std::size_t>();
    m.overall_accuracy = j.at("overall_accuracy").get<double>();
    m.old_class_accuracy = j.at("old_class_accuracy").get<double>();
    m.new_class_accuracy = j.at("new_class_accuracy").get<double>();
    m.task_aware_accuracy = j.at("task_aware_accuracy").get<double>();
    for (const auto& [key, cc] : j.at("per_class").items())
        m.per_class[std::stoi(key)] = ClassCount{cc.at("correct").get<std::size_t>(),
                                                 cc.at("total").get<std::size_t>()};
    return m;
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json steps_j = nlohmann::json::array();
    for (const auto& s : steps) steps_j.push_back(s.to_json());
    return {{"seed", seed},
            {"config_digest", config_digest},
            {"steps", steps_j},
            {"average_incremental", average_incremental},
            {"wall_seconds", wall_seconds}};
}

RunReport RunReport::from_json(const nlohmann::json& j) {
    RunReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& s : j.at("steps")) r.steps.push_back(StepMetrics::from_json(s));
    r.average_incremental = j.at("average_incremental").get<double>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    return r;
}

AggregateReport aggregate_runs(std::vector<RunReport> runs, double upper_bound) {
    if (runs.empty())
        throw std::invalid_argument("aggregate_runs: no completed runs");
    std::size_t steps = runs[0].steps.size();
    for (const auto& r : runs)
        if (r.steps.size() != steps)
            throw DataError("aggregate_runs: runs have incompatible step grids");

    AggregateReport agg;
    agg.upper_bound_accuracy = upper_bound;
    agg.step_mean.assign(steps, 0.0);
    agg.step_std.assign(steps, 0.0);
    agg.classes_seen.assign(steps, 0);
    for (std::size_t s = 0; s < steps; ++s) {
        double mean = 0.0;
        for (const auto& r : runs) mean += r.steps[s].overall_accuracy;
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& r : runs) {
            double d = r.steps[s].overall_accuracy - mean;
            var += d * d;
        }
        agg.step_mean[s] = mean;
        agg.step_std[s] = std::sqrt(var / static_cast<double>(runs.size()));
        agg.classes_seen[s] = runs[0].steps[s].seen_class_count;
    }
    double sum = 0.0;
    for (const auto& r : runs) sum += r.average_incremental;
    agg.mean_average_incremental = sum / static_cast<double>(runs.size());
    agg.runs = std::move(runs);
    return agg;
}

nlohmann::json AggregateReport::to_json() const {
    nlohmann::json runs_j = nlohmann::json::array();
    for (const auto& r : runs) runs_j.push_back(r.to_json());
    return {{"runs", runs_j},
            {"step_mean", step_mean},
            {"step_std", step_std},
            {"classes_seen", classes_seen},
            {"mean_average_incremental", mean_average_incremental},
            {"upper_bound_accuracy", upper_bound_accuracy}};
}

AggregateReport AggregateReport::from_json(const nlohmann::json& j) {
    AggregateReport a;
    for (const auto& r : j.at("runs")) a.runs.push_back(RunReport::from_json(r));
    a.step_mean = j.at("step_mean").get<std::vector<double>>();
    a.step_std = j.at("step_std").get<std::vector<double>>();
    a.classes_seen = j.at("classes_seen").get<std::vector<std::size_t>>();
    a.mean_average_incremental = j.at("mean_average_incremental").get<double>();
    a.upper_bound_accuracy = j.at("upper_bound_accuracy").get<double>();
    return a;
}

std::string AggregateReport::curves_csv() const {
    std::ostringstream out;
    out << "step,classes_seen,mean_acc,std_acc\n";
    out.precision(17);
    for (std::size_t s = 0; s < step_mean.size(); ++s)
        out << s << "," << classes_seen[s] << "," << step_mean[s] << ","
            << step_std[s] << "\n";
    return out.str();
}

}  // namespace icl
