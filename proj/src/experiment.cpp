#include "icl/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace icl {

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream ss;
    ss << rng;
    return ss.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
    std::istringstream ss(s);
    ss >> rng;
    if (!ss) throw StateError("corrupt rng state");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw StateError("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StateError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StateError("cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    return j;
}

fs::path step_dir(const std::string& run_dir, std::size_t step) {
    return fs::path(run_dir) / ("step_" + std::to_string(step));
}

void persist_step(const std::string& run_dir, const IncrementalState& state,
                  const PipelineConfig& pcfg, std::size_t step) {
    fs::path dir = step_dir(run_dir, step);
    fs::create_directories(dir);
    state.net.save((dir / "model.json").string());
    state.memory.save_manifest((dir / "memory.json").string(), pcfg.selection);
    write_text(dir / "rng.txt", rng_to_string(state.rng));
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& m : state.history) hist.push_back(m.to_json());
    write_text(dir / "metrics.json", hist.dump(2) + "\n");
    write_text(dir / "completed", "ok\n");  // written last
}

/// Index of the step to start from (0 when nothing is resumable); restores
/// state from the last completed checkpoint.
std::size_t restore_last_step(const std::string& run_dir, IncrementalState& state,
                              std::size_t total_steps) {
    std::size_t next = 0;
    for (std::size_t k = 0; k < total_steps; ++k) {
        if (!fs::exists(step_dir(run_dir, k) / "completed")) break;
        next = k + 1;
    }
    if (next == 0) return 0;
    fs::path dir = step_dir(run_dir, next - 1);
    state.net = IncrementalNet::load((dir / "model.json").string());
    state.memory = RepresentativeMemory::load_manifest((dir / "memory.json").string());
    rng_from_string(state.rng, read_text(dir / "rng.txt"));
    state.history.clear();
    for (const auto& m : read_json(dir / "metrics.json"))
        state.history.push_back(StepMetrics::from_json(m));
    state.step_index = next;
    return next;
}

}  // namespace

RunReport run_single(const ExperimentConfig& config, std::uint64_t seed,
                     const std::string& run_dir, bool resume,
                     std::ostream* progress) {
    auto start = std::chrono::steady_clock::now();
    SplitDataset data = config.build_dataset();
    ClassSplitPlan plan =
        make_class_splits(data.train.class_ids(), config.step_size, seed);
    PipelineConfig pcfg = config.pipeline_config();

    IncrementalState state;
    state.rng.seed(seed);
    state.net = IncrementalNet(MlpSpec{data.train.dim(), config.extractor_hidden},
                               state.rng);
    state.memory = RepresentativeMemory(config.memory_mode_enum(), config.memory_budget);

    std::size_t start_step = 0;
    if (!run_dir.empty()) {
        fs::create_directories(run_dir);
        if (resume)
            start_step = restore_last_step(run_dir, state, plan.batches.size());
    }

    for (std::size_t k = start_step; k < plan.batches.size(); ++k) {
        StepMetrics m =
            incremental_step(state, plan.batches[k], data.train, data.test, pcfg);
        if (progress)
            *progress << "run=" << seed << " step=" << k
                      << " classes_seen=" << m.seen_class_count
                      << " acc=" << m.overall_accuracy
                      << " old_acc=" << m.old_class_accuracy
                      << " new_acc=" << m.new_class_accuracy << "\n";
        if (!run_dir.empty()) persist_step(run_dir, state, pcfg, k);
    }

    RunReport report;
    report.seed = seed;
    report.config_digest = config.digest();
    report.steps = state.history;
    if (report.steps.size() >= 2) {
        std::vector<double> accs;
        for (const auto& m : report.steps) accs.push_back(m.overall_accuracy);
        report.average_incremental = average_incremental_accuracy(accs);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!run_dir.empty())
        write_text(fs::path(run_dir) / "report.json", report.to_json().dump(2) + "\n");
    return report;
}

double train_upper_bound(const ExperimentConfig& config, std::uint64_t seed) {
    SplitDataset data = config.build_dataset();
    PipelineConfig pcfg = config.pipeline_config();

    IncrementalState state;
    state.rng.seed(seed);
    state.net = IncrementalNet(MlpSpec{data.train.dim(), config.extractor_hidden},
                               state.rng);
    std::vector<int> all_classes = data.train.class_ids();
    state.net.add_classification_head(all_classes, state.rng);

    auto class_data = collect_class_samples(data.train, all_classes);
    const AugmentConfig* augment =
        config.disable_augmentation ? nullptr : &pcfg.augment;
    DualLabeledSet set = build_training_set(nullptr, class_data, nullptr, augment,
                                            data.train.shape, state.rng);
    train(state.net, set, pcfg.optimizer, pcfg.main_epochs, pcfg.loss, state.rng);
    return evaluate_accuracy(state.net, data.test, all_classes).overall_accuracy;
}

AggregateReport run_experiment(const ExperimentConfig& config,
                               const std::string& out_dir, bool resume,
                               std::size_t threads, std::ostream* progress) {
    for (const auto& w : config.validate())
        if (progress) *progress << "warning: " << w << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        config.save((fs::path(out_dir) / "config.json").string());
    }

    const auto& seeds = config.seeds;
    std::vector<RunReport> runs(seeds.size());
    auto run_dir_for = [&](std::uint64_t seed) {
        return out_dir.empty()
                   ? std::string()
                   : (fs::path(out_dir) / ("run_" + std::to_string(seed))).string();
    };

    if (threads <= 1 || seeds.size() == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            runs[i] = run_single(config, seeds[i], run_dir_for(seeds[i]), resume,
                                 progress);
    } else {
        // Independent seeded runs; results land in seed order. Workers do
        // not share a progress stream.
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        std::exception_ptr failure;
        for (std::size_t t = 0; t < std::min(threads, seeds.size()); ++t) {
            pool.emplace_back([&]() {
                while (true) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= seeds.size() || failure) return;
                        i = next++;
                    }
                    try {
                        runs[i] = run_single(config, seeds[i], run_dir_for(seeds[i]),
                                             resume, nullptr);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(mu);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    double upper = -1.0;
    if (config.run_upper_bound) {
        upper = train_upper_bound(config, seeds[0]);
        if (progress) *progress << "upper_bound acc=" << upper << "\n";
    }

    AggregateReport agg = aggregate_runs(std::move(runs), upper);
    if (!out_dir.empty()) {
        write_text(fs::path(out_dir) / "report.json", agg.to_json().dump(2) + "\n");
        write_text(fs::path(out_dir) / "curves.csv", agg.curves_csv());
    }
    return agg;
}

void report_runs(const std::vector<std::string>& run_dirs, std::ostream& out) {
    if (run_dirs.empty())
        throw std::invalid_argument("report: no run directories given");
    std::vector<AggregateReport> reports;
    for (const auto& dir : run_dirs)
        reports.push_back(
            AggregateReport::from_json(read_json(fs::path(dir) / "report.json")));

    for (std::size_t i = 1; i < reports.size(); ++i)
        if (reports[i].classes_seen != reports[0].classes_seen)
            throw DataError("report: '" + run_dirs[i] + "' has an incompatible step grid");

    out << "method,avg_incremental_accuracy,final_step_accuracy\n";
    out.precision(17);
    for (std::size_t i = 0; i < reports.size(); ++i)
        out << run_dirs[i] << "," << reports[i].mean_average_incremental << ","
            << reports[i].step_mean.back() << "\n";
    out << "\nstep,classes_seen";
    for (const auto& dir : run_dirs) out << "," << dir << "_mean," << dir << "_std";
    out << "\n";
    for (std::size_t s = 0; s < reports[0].step_mean.size(); ++s) {
        out << s << "," << reports[0].classes_seen[s];
        for (const auto& r : reports) out << "," << r.step_mean[s] << "," << r.step_std[s];
        out << "\n";
    }
}

}  // namespace icl
