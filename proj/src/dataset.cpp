#include "icl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace icl {

std::vector<int> Dataset::class_ids() const {
    std::set<int> ids(labels.begin(), labels.end());
    return {ids.begin(), ids.end()};
}

ClassSplitPlan make_class_splits(std::vector<int> class_ids, std::size_t step_size,
                                 std::uint64_t seed) {
    if (step_size == 0)
        throw std::invalid_argument("make_class_splits: step_size must be >= 1");
    if (class_ids.empty())
        throw std::invalid_argument("make_class_splits: no classes");
    if (step_size > class_ids.size()) {
        std::cerr << "warning: step_size " << step_size << " exceeds class count "
                  << class_ids.size() << "; using a single batch\n";
        step_size = class_ids.size();
    }
    std::mt19937_64 rng(seed);
    std::shuffle(class_ids.begin(), class_ids.end(), rng);
    ClassSplitPlan plan;
    plan.class_order = class_ids;
    plan.step_size = step_size;
    for (std::size_t i = 0; i < class_ids.size(); i += step_size) {
        std::size_t end = std::min(i + step_size, class_ids.size());
        plan.batches.emplace_back(class_ids.begin() + i, class_ids.begin() + end);
    }
    return plan;
}

NormalizationMode parse_normalization_mode(const std::string& name) {
    if (name == "div255-mean-sub") return NormalizationMode::Div255MeanSub;
    if (name == "mean-sub") return NormalizationMode::MeanSubOnly;
    if (name == "standardize") return NormalizationMode::Standardize;
    throw ConfigError("unknown normalization mode '" + name + "'");
}

NormalizationStats compute_normalization(const Dataset& train, NormalizationMode mode) {
    if (train.split != Split::Train)
        throw StateError("normalization statistics must be computed on the train split");
    if (train.inputs.empty())
        throw std::invalid_argument("compute_normalization: empty dataset");
    if (mode != NormalizationMode::Standardize && !train.shape.is_image())
        throw ConfigError("image normalization mode on a vector dataset");
    std::size_t dim = train.dim();
    double scale = mode == NormalizationMode::Div255MeanSub ? 1.0 / 255.0 : 1.0;

    NormalizationStats stats;
    stats.mode = mode;
    stats.mean.assign(dim, 0.0);
    for (const auto& x : train.inputs)
        for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += x[i] * scale;
    for (double& v : stats.mean) v /= static_cast<double>(train.size());

    if (mode == NormalizationMode::Standardize) {
        stats.stddev.assign(dim, 0.0);
        for (const auto& x : train.inputs)
            for (std::size_t i = 0; i < dim; ++i) {
                double d = x[i] - stats.mean[i];
                stats.stddev[i] += d * d;
            }
        for (double& v : stats.stddev)
            v = std::max(std::sqrt(v / static_cast<double>(train.size())), 1e-12);
    }
    return stats;
}

void apply_normalization(Dataset& dataset, const NormalizationStats& stats) {
    if (dataset.dim() != stats.mean.size())
        throw DimensionError("apply_normalization: dimension mismatch");
    double scale = stats.mode == NormalizationMode::Div255MeanSub ? 1.0 / 255.0 : 1.0;
    for (auto& x : dataset.inputs)
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = x[i] * scale - stats.mean[i];
            if (stats.mode == NormalizationMode::Standardize) x[i] /= stats.stddev[i];
        }
}

SplitDataset normalize(SplitDataset data, NormalizationMode mode) {
    auto stats = compute_normalization(data.train, mode);
    apply_normalization(data.train, stats);
    apply_normalization(data.test, stats);
    return data;
}

SplitDataset synthetic_gaussian_dataset(std::size_t num_classes, std::size_t dim,
                                        std::size_t train_per_class,
                                        std::size_t test_per_class,
                                        double separation, std::uint64_t seed) {
    if (num_classes < 2)
        throw std::invalid_argument("synthetic_gaussian_dataset: need >= 2 classes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Rejection-sample class means until all pairwise distances reach the
    // separation; widen the proposal radius if placement keeps failing.
    std::vector<std::vector<double>> means;
    double radius = separation * 1.5;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t attempts = 0;
        while (true) {
            std::uniform_real_distribution<double> u(-radius, radius);
            std::vector<double> m(dim);
            for (double& v : m) v = u(rng);
            bool ok = true;
            for (const auto& prev : means) {
                double s = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    double d = m[i] - prev[i];
                    s += d * d;
                }
                if (std::sqrt(s) < separation) { ok = false; break; }
            }
            if (ok) { means.push_back(std::move(m)); break; }
            if (++attempts % 200 == 0) radius *= 1.3;
        }
    }

    SplitDataset data;
    data.train.split = Split::Train;
    data.test.split = Split::Test;
    auto emit = [&](Dataset& ds, std::size_t count, int label) {
        for (std::size_t s = 0; s < count; ++s) {
            std::vector<double> x(dim);
            for (std::size_t i = 0; i < dim; ++i)
                x[i] = means[label][i] + gauss(rng);
            ds.inputs.push_back(std::move(x));
            ds.labels.push_back(label);
        }
    };
    for (std::size_t c = 0; c < num_classes; ++c) {
        emit(data.train, train_per_class, static_cast<int>(c));
        emit(data.test, test_per_class, static_cast<int>(c));
    }
    return data;
}

Dataset load_cifar_batches(const std::vector<std::string>& files, Split split) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPlane = 1024;
    Dataset ds;
    ds.split = split;
    ds.shape = ImageShape{32, 32, 3};
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open CIFAR batch: " + path);
        std::vector<unsigned char> rec(kRecord);
        while (in.read(reinterpret_cast<char*>(rec.data()), kRecord)) {
            ds.labels.push_back(rec[0]);
            std::vector<double> img(3 * kPlane);
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x)
                    for (std::size_t ch = 0; ch < 3; ++ch)
                        img[(y * 32 + x) * 3 + ch] =
                            static_cast<double>(rec[1 + ch * kPlane + y * 32 + x]);
            ds.inputs.push_back(std::move(img));
        }
        if (in.gcount() != 0)
            throw DataError("truncated CIFAR record in " + path);
    }
    return ds;
}

Dataset load_csv(const std::string& path, Split split) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV: " + path);
    Dataset ds;
    ds.split = split;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2)
            throw DataError("CSV row needs a label and at least one feature");
        ds.labels.push_back(static_cast<int>(row[0]));
        ds.inputs.emplace_back(row.begin() + 1, row.end());
        if (ds.inputs.back().size() != ds.inputs.front().size())
            throw DataError("CSV rows have inconsistent widths");
    }
    return ds;
}

}  // namespace icl
