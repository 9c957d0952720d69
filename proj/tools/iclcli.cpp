#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icl/experiment.hpp"

namespace {

// Exit codes: 0 success, 1 config error, 2 runtime failure.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        seeds.push_back(std::stoull(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental class learning experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_csv;
    bool resume = false;
    std::size_t threads = 1;

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--resume", resume, "continue from the last completed step");
    run->add_option("--seeds", seeds_csv, "comma-separated seed override");
    run->add_option("--threads", threads, "worker threads for independent seeds");

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "merge finished run directories");
    report->add_option("dirs", report_dirs, "experiment output directories")->required();

    auto* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            icl::ExperimentConfig config;
            try {
                config = icl::ExperimentConfig::load(config_path);
                if (!seeds_csv.empty()) config.seeds = parse_seed_list(seeds_csv);
                config.validate();
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kConfigError;
            }
            auto agg = icl::run_experiment(config, out_dir, resume, threads, &std::cout);
            std::cout << "avg_incremental_accuracy=" << agg.mean_average_incremental
                      << "\n";
        } else if (report->parsed()) {
            icl::report_runs(report_dirs, std::cout);
        } else if (validate->parsed()) {
            try {
                auto config = icl::ExperimentConfig::load(config_path);
                for (const auto& w : config.validate())
                    std::cout << "warning: " << w << "\n";
                std::cout << "config ok (digest " << config.digest() << ")\n";
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kConfigError;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
