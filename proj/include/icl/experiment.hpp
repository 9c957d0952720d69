#pragma once

#include <iosfwd>
#include <string>

#include "icl/config.hpp"
#include "icl/evaluation.hpp"

namespace icl {

/// One seeded incremental run. run_dir may be empty (no persistence);
/// otherwise each completed step leaves a checkpoint (model, memory
/// manifest, rng state, metric log) and resume continues from the last
/// completed step. progress may be null.
RunReport run_single(const ExperimentConfig& config, std::uint64_t seed,
                     const std::string& run_dir, bool resume,
                     std::ostream* progress);

/// Non-incremental reference: one head over all classes, trained jointly.
double train_upper_bound(const ExperimentConfig& config, std::uint64_t seed);

/// All seeds (optionally fanned out over threads), aggregated. Writes
/// config.json, per-run directories, report.json and curves.csv when
/// out_dir is non-empty.
AggregateReport run_experiment(const ExperimentConfig& config,
                               const std::string& out_dir, bool resume,
                               std::size_t threads, std::ostream* progress);

/// Merge previously written experiment directories: per-method summary
/// table on `out` plus a combined per-step CSV. Throws DataError on
/// incompatible step grids.
void report_runs(const std::vector<std::string>& run_dirs, std::ostream& out);

}  // namespace icl
