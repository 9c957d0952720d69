#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "icl/memory.hpp"

using namespace icl;

namespace {

using Features = std::vector<std::vector<double>>;

Features random_features(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Features f(count, std::vector<double>(dim));
    for (auto& v : f)
        for (double& x : v) x = gauss(rng);
    return f;
}

double dist_to_mean(const std::vector<double>& sum, const std::vector<double>& mean,
                    std::size_t k) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) {
        double diff = mean[j] - sum[j] / static_cast<double>(k);
        d2 += diff * diff;
    }
    return std::sqrt(d2);
}

// Exhaustive greedy reference: at each step try every remaining candidate
// and keep the one whose inclusion brings the prefix mean closest to the
// class mean, lowest index on ties.
std::vector<std::size_t> greedy_oracle(const Features& f, const std::vector<double>& mean) {
    std::vector<std::size_t> order;
    std::vector<bool> used(f.size(), false);
    std::vector<double> sum(mean.size(), 0.0);
    for (std::size_t k = 1; k <= f.size(); ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = f.size();
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (used[i]) continue;
            std::vector<double> trial = sum;
            for (std::size_t j = 0; j < mean.size(); ++j) trial[j] += f[i][j];
            double d = dist_to_mean(trial, mean, k);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        used[best_i] = true;
        order.push_back(best_i);
        for (std::size_t j = 0; j < mean.size(); ++j) sum[j] += f[best_i][j];
    }
    return order;
}

std::vector<StoredSample> make_samples(const Features& f, long id_base = 0) {
    std::vector<StoredSample> s;
    for (std::size_t i = 0; i < f.size(); ++i)
        s.push_back(StoredSample{id_base + static_cast<long>(i), f[i]});
    return s;
}

}  // namespace

TEST_CASE("per-class budget") {
    RepresentativeMemory fixed_total(MemoryMode::FixedTotal, 2000);
    CHECK(fixed_total.per_class_budget(100) == 20);
    CHECK(fixed_total.per_class_budget(10) == 200);

    RepresentativeMemory small(MemoryMode::FixedTotal, 5);
    CHECK(small.per_class_budget(2) == 2);

    RepresentativeMemory per_class(MemoryMode::FixedPerClass, 7);
    CHECK(per_class.per_class_budget(3) == 7);
    CHECK(per_class.per_class_budget(100) == 7);

    CHECK_THROWS_AS(fixed_total.per_class_budget(0), std::invalid_argument);
}

TEST_CASE("herding: single sample and identical-sample tie break") {
    CHECK(herding_order({{1.0, 2.0}}, {1.0, 2.0}) == std::vector<std::size_t>{0});
    CHECK(herding_order({{1.0}, {1.0}}, {1.0}) == std::vector<std::size_t>({0, 1}));
}

TEST_CASE("herding matches the exhaustive greedy oracle on random 2D classes") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        Features f = random_features(6, 2, rng);
        auto mean = feature_mean(f);
        CHECK(herding_order(f, mean) == greedy_oracle(f, mean));
    }
}

TEST_CASE("herding rejects mismatched dimensions") {
    CHECK_THROWS_AS(herding_order({{1.0, 2.0}, {1.0}}, {1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("histogram: all samples equidistant keeps input order") {
    Features f{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    auto order = histogram_order(f, {0.0, 0.0});
    CHECK(order == std::vector<std::size_t>({0, 1, 2, 3}));
}

TEST_CASE("histogram: single sample") {
    CHECK(histogram_order({{3.0}}, {0.0}) == std::vector<std::size_t>{0});
}

TEST_CASE("histogram: distances 1..10 put one sample per bin on the first pass") {
    // Ten 1-d samples at distance 1..10 from mean 0: with 10 equal-width
    // bins each sample occupies its own bin, so the proportional draw takes
    // exactly one per bin per pass. Simulate that rule directly.
    Features f;
    for (int d = 1; d <= 10; ++d) f.push_back({static_cast<double>(d)});
    auto order = histogram_order(f, {0.0});
    REQUIRE(order.size() == 10);
    std::set<std::size_t> first_pass(order.begin(), order.end());
    CHECK(first_pass.size() == 10);
    // Direct simulation: bins are singletons, visited lowest-distance first.
    std::vector<std::size_t> want{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(order == want);
}

TEST_CASE("histogram draws proportionally to bin occupancy") {
    // Distances: five samples near 0.05 (first bin), one at 0.95 (last bin).
    Features f{{0.05}, {0.051}, {0.052}, {0.053}, {0.054}, {0.95}};
    auto order = histogram_order(f, {0.0});
    REQUIRE(order.size() == 6);
    // With occupancy 5:1 the first largest-remainder pass over a 6-slot
    // cycle allocates 5 slots to the crowded bin and 1 to the other.
    std::set<std::size_t> all(order.begin(), order.end());
    CHECK(all.size() == 6);
}

TEST_CASE("nearest-mean sort orders by distance, closest first") {
    Features f{{5.0}, {1.0}, {3.0}};
    auto order = nearest_mean_order(f, {0.0});
    CHECK(order == std::vector<std::size_t>({1, 2, 0}));
}

TEST_CASE("random strategy is deterministic in its seed") {
    auto a = random_order(20, 99);
    auto b = random_order(20, 99);
    auto c = random_order(20, 100);
    CHECK(a == b);
    CHECK(a != c);
    std::set<std::size_t> unique(a.begin(), a.end());
    CHECK(unique.size() == 20);
}

TEST_CASE("select_exemplars: n >= sample count keeps the full strategy order") {
    std::mt19937_64 rng(7);
    Features f = random_features(5, 3, rng);
    auto samples = make_samples(f);
    SelectionStrategy herding;
    auto all = select_exemplars(samples, f, 10, herding);
    auto order = herding_order(f, feature_mean(f));
    REQUIRE(all.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(all[i].id == static_cast<long>(order[i]));
}

TEST_CASE("select_exemplars: herding n=2 equals the first two oracle entries") {
    std::mt19937_64 rng(13);
    Features f = random_features(6, 2, rng);
    auto samples = make_samples(f);
    auto oracle = greedy_oracle(f, feature_mean(f));
    auto picked = select_exemplars(samples, f, 2, SelectionStrategy{});
    REQUIRE(picked.size() == 2);
    CHECK(picked[0].id == static_cast<long>(oracle[0]));
    CHECK(picked[1].id == static_cast<long>(oracle[1]));
}

TEST_CASE("reduce_exemplars prefix behavior") {
    RepresentativeMemory mem(MemoryMode::FixedPerClass, 5);
    std::mt19937_64 rng(3);
    Features f = random_features(5, 2, rng);
    mem.update_memory({{0, make_samples(f)}}, {{0, f}}, SelectionStrategy{});
    auto full = mem.exemplars(0);
    REQUIRE(full.size() == 5);

    mem.reduce_exemplars(3);
    auto three = mem.exemplars(0);
    REQUIRE(three.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(three[i].id == full[i].id);

    // n larger than the list leaves it unchanged.
    mem.reduce_exemplars(10);
    CHECK(mem.exemplars(0).size() == 3);

    // reduce(reduce(M,5),1) == reduce(M,1): prefix algebra.
    mem.reduce_exemplars(1);
    CHECK(mem.exemplars(0).size() == 1);
    CHECK(mem.exemplars(0)[0].id == full[0].id);
}

TEST_CASE("fixed-total update: K=10, 2 stored classes plus 3 new ones") {
    std::mt19937_64 rng(17);
    RepresentativeMemory mem(MemoryMode::FixedTotal, 10);
    SelectionStrategy strategy;

    std::map<int, std::vector<StoredSample>> initial;
    std::map<int, Features> initial_f;
    for (int c : {0, 1}) {
        Features f = random_features(8, 2, rng);
        initial[c] = make_samples(f, c * 100);
        initial_f[c] = f;
    }
    mem.update_memory(initial, initial_f, strategy);
    CHECK(mem.per_class_budget(2) == 5);
    CHECK(mem.exemplars(0).size() == 5);

    std::map<int, std::vector<StoredSample>> added;
    std::map<int, Features> added_f;
    for (int c : {2, 3, 4}) {
        Features f = random_features(8, 2, rng);
        added[c] = make_samples(f, c * 100);
        added_f[c] = f;
    }
    mem.update_memory(added, added_f, strategy);

    CHECK(mem.class_count() == 5);
    for (int c = 0; c < 5; ++c) CHECK(mem.exemplars(c).size() == 2);
    CHECK(mem.total_stored() == 10);
}

TEST_CASE("fixed-per-class update leaves old lists untouched") {
    std::mt19937_64 rng(19);
    RepresentativeMemory mem(MemoryMode::FixedPerClass, 3);
    SelectionStrategy strategy;

    Features f0 = random_features(6, 2, rng);
    mem.update_memory({{0, make_samples(f0, 0)}}, {{0, f0}}, strategy);
    auto before = mem.exemplars(0);

    Features f1 = random_features(50, 2, rng);
    mem.update_memory({{1, make_samples(f1, 1000)}}, {{1, f1}}, strategy);

    CHECK(mem.exemplars(1).size() == 3);
    REQUIRE(mem.exemplars(0).size() == before.size());
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(mem.exemplars(0)[i].id == before[i].id);
}

TEST_CASE("update_memory equals composing reduce then select by hand") {
    std::mt19937_64 rng(23);
    SelectionStrategy strategy;

    RepresentativeMemory mem(MemoryMode::FixedTotal, 12);
    Features fa = random_features(10, 3, rng);
    Features fb = random_features(10, 3, rng);
    mem.update_memory({{0, make_samples(fa, 0)}, {1, make_samples(fb, 100)}},
                      {{0, fa}, {1, fb}}, strategy);

    RepresentativeMemory manual = mem;
    Features fc = random_features(10, 3, rng);

    mem.update_memory({{2, make_samples(fc, 200)}}, {{2, fc}}, strategy);

    // Manual composition: reduce to the new budget, then select the new class.
    std::size_t n = manual.per_class_budget(3);
    manual.reduce_exemplars(n);
    auto selected = select_exemplars(make_samples(fc, 200), fc, n, strategy);

    for (int c : {0, 1}) {
        REQUIRE(mem.exemplars(c).size() == manual.exemplars(c).size());
        for (std::size_t i = 0; i < mem.exemplars(c).size(); ++i)
            CHECK(mem.exemplars(c)[i].id == manual.exemplars(c)[i].id);
    }
    REQUIRE(mem.exemplars(2).size() == selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i)
        CHECK(mem.exemplars(2)[i].id == selected[i].id);
}

TEST_CASE("randomized update sequences keep the capacity bound and prefix stability") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> count_pick(1, 3);
    std::uniform_int_distribution<int> size_pick(1, 12);
    std::uniform_int_distribution<int> strat_pick(0, 3);

    for (int trial = 0; trial < 60; ++trial) {
        std::size_t K = 5 + static_cast<std::size_t>(size_pick(rng));
        RepresentativeMemory mem(MemoryMode::FixedTotal, K);
        int next_class = 0;
        std::map<int, std::vector<long>> original_order;  // full selection order
        std::map<int, std::set<long>> ever_removed;

        for (int step = 0; step < 5; ++step) {
            SelectionStrategy strategy;
            strategy.kind = static_cast<SelectionStrategy::Kind>(strat_pick(rng));
            strategy.seed = rng();

            std::map<int, std::vector<StoredSample>> batch;
            std::map<int, Features> batch_f;
            int classes = count_pick(rng);
            for (int c = 0; c < classes; ++c) {
                int id = next_class++;
                Features f = random_features(size_pick(rng), 2, rng);
                batch[id] = make_samples(f, id * 1000);
                batch_f[id] = f;
            }

            std::map<int, std::vector<long>> before;
            for (const auto& [cid, list] : mem.store()) {
                std::vector<long> ids;
                for (const auto& s : list) ids.push_back(s.id);
                before[cid] = ids;
            }

            mem.update_memory(batch, batch_f, strategy);

            // Capacity bound.
            CHECK(mem.total_stored() <= K);

            for (const auto& [cid, list] : mem.store()) {
                std::vector<long> ids;
                for (const auto& s : list) ids.push_back(s.id);
                if (original_order.count(cid) == 0) {
                    // First appearance: remember the selection order prefix base.
                    original_order[cid] = ids;
                } else {
                    // Prefix stability against the original selection order.
                    const auto& orig = original_order[cid];
                    REQUIRE(ids.size() <= orig.size());
                    for (std::size_t i = 0; i < ids.size(); ++i)
                        CHECK(ids[i] == orig[i]);
                    // No resurrection.
                    for (long id : ids) CHECK(ever_removed[cid].count(id) == 0);
                }
                // Track removals relative to the previous state.
                if (before.count(cid)) {
                    std::set<long> now(ids.begin(), ids.end());
                    for (long id : before[cid])
                        if (now.count(id) == 0) ever_removed[cid].insert(id);
                }
            }
        }
    }
}

TEST_CASE("strategy determinism: herding and histogram are pure in their inputs") {
    std::mt19937_64 rng(41);
    Features f = random_features(9, 3, rng);
    auto mean = feature_mean(f);
    CHECK(herding_order(f, mean) == herding_order(f, mean));
    CHECK(histogram_order(f, mean) == histogram_order(f, mean));
}

TEST_CASE("strategy names parse and round-trip") {
    for (const char* name : {"herding", "random", "histogram", "nearest-mean-sort"}) {
        auto s = SelectionStrategy::parse(name, 5);
        CHECK(s.name() == name);
    }
    CHECK_THROWS_AS(SelectionStrategy::parse("bogus", 0), ConfigError);
}

TEST_CASE("memory manifest round-trips through JSON and disk") {
    std::mt19937_64 rng(43);
    RepresentativeMemory mem(MemoryMode::FixedTotal, 8);
    SelectionStrategy strategy;
    Features f = random_features(6, 2, rng);
    mem.update_memory({{3, make_samples(f, 30)}}, {{3, f}}, strategy);

    RepresentativeMemory copy = RepresentativeMemory::from_manifest(mem.manifest(strategy));
    CHECK(copy.mode() == mem.mode());
    CHECK(copy.budget() == mem.budget());
    REQUIRE(copy.exemplars(3).size() == mem.exemplars(3).size());
    for (std::size_t i = 0; i < copy.exemplars(3).size(); ++i) {
        CHECK(copy.exemplars(3)[i].id == mem.exemplars(3)[i].id);
        CHECK(copy.exemplars(3)[i].input == mem.exemplars(3)[i].input);
    }

    std::string path = "memory_manifest_test.json";
    mem.save_manifest(path, strategy);
    RepresentativeMemory loaded = RepresentativeMemory::load_manifest(path);
    CHECK(loaded.total_stored() == mem.total_stored());
    std::remove(path.c_str());
}
