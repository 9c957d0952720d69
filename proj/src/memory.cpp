#include "icl/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace icl {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_features(const std::vector<std::vector<double>>& features,
                    const std::vector<double>& mean) {
    if (features.empty())
        throw std::invalid_argument("selection: no feature vectors");
    for (const auto& f : features)
        if (f.size() != mean.size())
            throw std::invalid_argument("selection: feature dimension mismatch");
}

}  // namespace

std::string SelectionStrategy::name() const {
    switch (kind) {
    case Kind::Herding: return "herding";
    case Kind::Random: return "random";
    case Kind::Histogram: return "histogram";
    case Kind::NearestMeanSort: return "nearest-mean-sort";
    }
    return "?";
}

SelectionStrategy SelectionStrategy::parse(const std::string& name, std::uint64_t seed) {
    SelectionStrategy s;
    s.seed = seed;
    if (name == "herding") s.kind = Kind::Herding;
    else if (name == "random") s.kind = Kind::Random;
    else if (name == "histogram") s.kind = Kind::Histogram;
    else if (name == "nearest-mean-sort") s.kind = Kind::NearestMeanSort;
    else throw ConfigError("unknown selection strategy '" + name + "'");
    return s;
}

std::vector<double> feature_mean(const std::vector<std::vector<double>>& features) {
    if (features.empty())
        throw std::invalid_argument("feature_mean: empty feature list");
    std::vector<double> mean(features[0].size(), 0.0);
    for (const auto& f : features) {
        if (f.size() != mean.size())
            throw std::invalid_argument("feature_mean: dimension mismatch");
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += f[i];
    }
    for (double& v : mean) v /= static_cast<double>(features.size());
    return mean;
}

std::vector<std::size_t> herding_order(const std::vector<std::vector<double>>& features,
                                       const std::vector<double>& class_mean) {
    check_features(features, class_mean);
    std::size_t n = features.size();
    std::size_t dim = class_mean.size();
    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> chosen(n, false);
    std::vector<double> acc(dim, 0.0);  // sum of chosen features
    std::vector<double> trial(dim);
    for (std::size_t k = 1; k <= n; ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            for (std::size_t d = 0; d < dim; ++d)
                trial[d] = (acc[d] + features[i][d]) / static_cast<double>(k);
            double dist = sq_dist(trial, class_mean);
            if (dist < best) {
                best = dist;
                best_i = i;
            }
        }
        chosen[best_i] = true;
        for (std::size_t d = 0; d < dim; ++d) acc[d] += features[best_i][d];
        order.push_back(best_i);
    }
    return order;
}

std::vector<std::size_t> histogram_order(const std::vector<std::vector<double>>& features,
                                         const std::vector<double>& class_mean,
                                         int bins) {
    check_features(features, class_mean);
    std::size_t n = features.size();
    std::vector<double> dist(n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::sqrt(sq_dist(features[i], class_mean));
        lo = std::min(lo, dist[i]);
        hi = std::max(hi, dist[i]);
    }
    std::vector<std::vector<std::size_t>> bucket(bins);
    double width = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        int b = width == 0.0
                    ? 0
                    : std::min(bins - 1, static_cast<int>((dist[i] - lo) / width *
                                                          static_cast<double>(bins)));
        bucket[b].push_back(i);
    }
    // Largest-remainder interleave: bins contribute in proportion to their
    // occupancy; ties resolved by lowest bin index.
    std::vector<std::size_t> next(bins, 0), taken(bins, 0);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t t = 1; t <= n; ++t) {
        int best_b = -1;
        double best_deficit = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < bins; ++b) {
            if (next[b] >= bucket[b].size()) continue;
            double share = static_cast<double>(bucket[b].size()) / static_cast<double>(n);
            double deficit = share * static_cast<double>(t) -
                             static_cast<double>(taken[b]);
            if (deficit > best_deficit + 1e-12) {
                best_deficit = deficit;
                best_b = b;
            }
        }
        order.push_back(bucket[best_b][next[best_b]++]);
        ++taken[best_b];
    }
    return order;
}

std::vector<std::size_t> nearest_mean_order(const std::vector<std::vector<double>>& features,
                                            const std::vector<double>& class_mean) {
    check_features(features, class_mean);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        dist[i] = sq_dist(features[i], class_mean);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return order;
}

std::vector<std::size_t> random_order(std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<std::size_t> strategy_order(const std::vector<std::vector<double>>& features,
                                        const SelectionStrategy& strategy) {
    switch (strategy.kind) {
    case SelectionStrategy::Kind::Herding:
        return herding_order(features, feature_mean(features));
    case SelectionStrategy::Kind::Histogram:
        return histogram_order(features, feature_mean(features), strategy.histogram_bins);
    case SelectionStrategy::Kind::NearestMeanSort:
        return nearest_mean_order(features, feature_mean(features));
    case SelectionStrategy::Kind::Random:
        return random_order(features.size(), strategy.seed);
    }
    throw ConfigError("strategy_order: bad strategy");
}

std::vector<StoredSample> select_exemplars(const std::vector<StoredSample>& class_samples,
                                           const std::vector<std::vector<double>>& features,
                                           std::size_t n,
                                           const SelectionStrategy& strategy) {
    if (class_samples.size() != features.size())
        throw std::invalid_argument("select_exemplars: samples/features misaligned");
    auto order = strategy_order(features, strategy);
    std::size_t take = std::min(n, class_samples.size());
    std::vector<StoredSample> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(class_samples[order[i]]);
    return out;
}

RepresentativeMemory::RepresentativeMemory(MemoryMode mode, std::size_t budget)
    : mode_(mode), budget_(budget) {
    if (budget == 0)
        throw ConfigError("RepresentativeMemory: budget must be >= 1");
}

std::size_t RepresentativeMemory::per_class_budget(std::size_t total_classes) const {
    if (total_classes == 0)
        throw std::invalid_argument("per_class_budget: class count must be >= 1");
    return mode_ == MemoryMode::FixedTotal ? budget_ / total_classes : budget_;
}

std::size_t RepresentativeMemory::total_stored() const {
    std::size_t n = 0;
    for (const auto& [c, list] : store_) n += list.size();
    return n;
}

const std::vector<StoredSample>& RepresentativeMemory::exemplars(int class_id) const {
    auto it = store_.find(class_id);
    if (it == store_.end())
        throw std::invalid_argument("memory: class " + std::to_string(class_id) +
                                    " not stored");
    return it->second;
}

void RepresentativeMemory::reduce_exemplars(std::size_t n) {
    for (auto& [c, list] : store_)
        if (list.size() > n) list.resize(n);
}

void RepresentativeMemory::update_memory(
    const std::map<int, std::vector<StoredSample>>& new_classes,
    const std::map<int, std::vector<std::vector<double>>>& features,
    const SelectionStrategy& strategy) {
    for (const auto& [c, samples] : new_classes)
        if (store_.count(c))
            throw ConfigError("update_memory: class " + std::to_string(c) +
                              " already stored");
    std::size_t total = store_.size() + new_classes.size();
    std::size_t n = per_class_budget(total);
    reduce_exemplars(n);
    for (const auto& [c, samples] : new_classes) {
        auto fit = features.find(c);
        if (fit == features.end())
            throw ConfigError("update_memory: no features for class " +
                              std::to_string(c));
        store_[c] = select_exemplars(samples, fit->second, n, strategy);
    }
}

nlohmann::json RepresentativeMemory::manifest(const SelectionStrategy& strategy) const {
    nlohmann::json j;
    j["mode"] = mode_ == MemoryMode::FixedTotal ? "fixed-total" : "fixed-per-class";
    j["budget"] = budget_;
    j["strategy"] = strategy.name();
    j["strategy_seed"] = strategy.seed;
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [c, list] : store_) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& s : list)
            entries.push_back({{"id", s.id}, {"input", s.input}});
        classes[std::to_string(c)] = entries;
    }
    j["classes"] = classes;
    return j;
}

void RepresentativeMemory::save_manifest(const std::string& path,
                                         const SelectionStrategy& strategy) const {
    std::ofstream out(path);
    if (!out) throw StateError("cannot write memory manifest: " + path);
    out << manifest(strategy).dump(2) << "\n";
}

RepresentativeMemory RepresentativeMemory::from_manifest(const nlohmann::json& j) {
    RepresentativeMemory m(j.at("mode").get<std::string>() == "fixed-total"
                               ? MemoryMode::FixedTotal
                               : MemoryMode::FixedPerClass,
                           j.at("budget").get<std::size_t>());
    for (const auto& [key, entries] : j.at("classes").items()) {
        std::vector<StoredSample> list;
        for (const auto& e : entries)
            list.push_back(StoredSample{e.at("id").get<long>(),
                                        e.at("input").get<std::vector<double>>()});
        m.store_[std::stoi(key)] = std::move(list);
    }
    return m;
}

RepresentativeMemory RepresentativeMemory::load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StateError("cannot read memory manifest: " + path);
    nlohmann::json j;
    in >> j;
    return from_manifest(j);
}

}  // namespace icl
