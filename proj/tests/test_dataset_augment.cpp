#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "icl/augment.hpp"
#include "icl/dataset.hpp"

using namespace icl;

namespace {

const ImageShape kTiny{4, 4, 1};

std::vector<double> ramp_image(const ImageShape& shape) {
    std::vector<double> img(shape.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<double>(i * 255 / (img.size() - 1));
    return img;
}

// Closed-form least-squares fit of one-hot targets as a linear separability
// oracle for the synthetic data.
double least_squares_accuracy(const Dataset& train, const Dataset& test) {
    std::size_t d = train.dim() + 1;  // bias column
    auto classes = train.class_ids();
    std::size_t c = classes.size();
    std::map<int, std::size_t> col;
    for (std::size_t i = 0; i < c; ++i) col[classes[i]] = i;

    // Normal equations (X^T X + eps I) W = X^T Y.
    std::vector<std::vector<double>> xtx(d, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> xty(d, std::vector<double>(c, 0.0));
    for (std::size_t s = 0; s < train.size(); ++s) {
        std::vector<double> x = train.inputs[s];
        x.push_back(1.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) xtx[i][j] += x[i] * x[j];
            xty[i][col.at(train.labels[s])] += x[i];
        }
    }
    for (std::size_t i = 0; i < d; ++i) xtx[i][i] += 1e-6;

    // Gaussian elimination on the augmented system.
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t piv = i;
        for (std::size_t r = i + 1; r < d; ++r)
            if (std::abs(xtx[r][i]) > std::abs(xtx[piv][i])) piv = r;
        std::swap(xtx[i], xtx[piv]);
        std::swap(xty[i], xty[piv]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == i) continue;
            double factor = xtx[r][i] / xtx[i][i];
            for (std::size_t j = 0; j < d; ++j) xtx[r][j] -= factor * xtx[i][j];
            for (std::size_t j = 0; j < c; ++j) xty[r][j] -= factor * xty[i][j];
        }
    }
    std::vector<std::vector<double>> w(d, std::vector<double>(c));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < c; ++j) w[i][j] = xty[i][j] / xtx[i][i];

    std::size_t correct = 0;
    for (std::size_t s = 0; s < test.size(); ++s) {
        std::vector<double> x = test.inputs[s];
        x.push_back(1.0);
        std::size_t best = 0;
        double best_v = -1e300;
        for (std::size_t j = 0; j < c; ++j) {
            double v = 0.0;
            for (std::size_t i = 0; i < d; ++i) v += x[i] * w[i][j];
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        if (classes[best] == test.labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

TEST_CASE("class splits: 10 classes step 2 gives 5 batches of 2") {
    auto plan = make_class_splits({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 2, 1);
    REQUIRE(plan.batches.size() == 5);
    std::set<int> seen;
    for (const auto& b : plan.batches) {
        CHECK(b.size() == 2);
        seen.insert(b.begin(), b.end());
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("class splits: 100 classes step 50 gives 2 steps") {
    std::vector<int> ids(100);
    for (int i = 0; i < 100; ++i) ids[i] = i;
    auto plan = make_class_splits(ids, 50, 3);
    CHECK(plan.batches.size() == 2);
}

TEST_CASE("class splits are deterministic per seed and partition the classes") {
    std::vector<int> ids{3, 1, 4, 1 + 4, 9, 2, 6};
    auto a = make_class_splits(ids, 3, 42);
    auto b = make_class_splits(ids, 3, 42);
    CHECK(a.class_order == b.class_order);
    CHECK(a.batches == b.batches);

    std::multiset<int> flattened;
    for (const auto& batch : a.batches) flattened.insert(batch.begin(), batch.end());
    CHECK(flattened == std::multiset<int>(ids.begin(), ids.end()));
}

TEST_CASE("oversized step size degrades to a single batch") {
    auto plan = make_class_splits({0, 1, 2}, 10, 1);
    REQUIRE(plan.batches.size() == 1);
    CHECK(plan.batches[0].size() == 3);
}

TEST_CASE("step size zero is rejected") {
    CHECK_THROWS_AS(make_class_splits({0, 1}, 0, 1), std::invalid_argument);
}

TEST_CASE("normalization: constant-128 images vanish under divide-and-mean-subtract") {
    SplitDataset data;
    data.train.split = Split::Train;
    data.train.shape = kTiny;
    data.train.inputs = {std::vector<double>(kTiny.size(), 128.0),
                         std::vector<double>(kTiny.size(), 128.0)};
    data.train.labels = {0, 1};
    data.test = data.train;
    data.test.split = Split::Test;

    SplitDataset out = normalize(std::move(data), NormalizationMode::Div255MeanSub);
    for (const auto& img : out.train.inputs)
        for (double v : img) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto& img : out.test.inputs)
        for (double v : img) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("normalization: mean-sub-only keeps the raw pixel scale") {
    Dataset train;
    train.split = Split::Train;
    train.shape = kTiny;
    train.inputs = {std::vector<double>(kTiny.size(), 100.0),
                    std::vector<double>(kTiny.size(), 200.0)};
    train.labels = {0, 1};
    auto stats = compute_normalization(train, NormalizationMode::MeanSubOnly);
    apply_normalization(train, stats);
    // Mean was 150; values land at -50 and +50, within [-mean, 255-mean].
    CHECK(train.inputs[0][0] == doctest::Approx(-50.0));
    CHECK(train.inputs[1][0] == doctest::Approx(50.0));
}

TEST_CASE("normalization statistics must come from the train split") {
    Dataset test;
    test.split = Split::Test;
    test.shape = kTiny;
    test.inputs = {std::vector<double>(kTiny.size(), 1.0)};
    test.labels = {0};
    CHECK_THROWS_AS(compute_normalization(test, NormalizationMode::MeanSubOnly),
                    StateError);
}

TEST_CASE("image normalization modes reject vector datasets") {
    Dataset train;
    train.split = Split::Train;
    train.inputs = {{1.0, 2.0}};
    train.labels = {0};
    CHECK_THROWS_AS(compute_normalization(train, NormalizationMode::Div255MeanSub),
                    ConfigError);
}

TEST_CASE("brightness: zero delta is the identity, clamp holds at 255") {
    auto img = ramp_image(kTiny);
    CHECK(brightness_with(img, 0.0) == img);

    std::vector<double> white(kTiny.size(), 255.0);
    CHECK(brightness_with(white, 40.0) == white);

    std::mt19937_64 a(5), b(5);
    CHECK(augment_brightness(img, a) == augment_brightness(img, b));
}

TEST_CASE("contrast: identity at 1, constants are fixed points, 0.2 shrinks toward mean") {
    auto img = ramp_image(kTiny);
    auto same = contrast_with(img, kTiny, 1.0);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(same[i] == doctest::Approx(img[i]).epsilon(1e-12));

    std::vector<double> flat(kTiny.size(), 77.0);
    CHECK(contrast_with(flat, kTiny, 0.3) == flat);

    // Two-valued image 100/200, mean 150: contrast 0.2 maps to 140/160.
    std::vector<double> duo(kTiny.size(), 100.0);
    for (std::size_t i = kTiny.size() / 2; i < kTiny.size(); ++i) duo[i] = 200.0;
    auto out = contrast_with(duo, kTiny, 0.2);
    CHECK(out[0] == doctest::Approx((100.0 - 150.0) * 0.2 + 150.0));
    CHECK(out[kTiny.size() - 1] == doctest::Approx((200.0 - 150.0) * 0.2 + 150.0));
}

TEST_CASE("crop: centered offset reproduces the input, mirror is an involution") {
    auto img = ramp_image(kTiny);
    CHECK(crop_at(img, kTiny, 2, 2, 2) == img);
    CHECK(mirror(mirror(img, kTiny), kTiny) == img);
    CHECK(crop_at(img, kTiny, 2, 0, 0).size() == img.size());
}

TEST_CASE("cifar-11 recipe emits exactly 11 new samples of unchanged size") {
    AugmentConfig cfg;
    cfg.recipe = Recipe::Cifar11;
    cfg.crop_pad = 1;
    std::mt19937_64 rng(9);
    auto img = ramp_image(kTiny);
    auto out = augment_recipe(img, kTiny, cfg, rng);
    REQUIRE(out.size() == 11);
    for (const auto& s : out) CHECK(s.size() == img.size());
}

TEST_CASE("imagenet-style recipe doubles the sample count") {
    AugmentConfig cfg;
    cfg.recipe = Recipe::ImagenetStyle;
    std::mt19937_64 rng(9);
    auto out = augment_recipe(ramp_image(kTiny), kTiny, cfg, rng);
    CHECK(out.size() == 1);  // one new sample per input = 2x total
}

TEST_CASE("vector recipe with zero jitter returns exact copies") {
    AugmentConfig cfg;
    cfg.recipe = Recipe::VectorJitter;
    cfg.jitter_scale = 0.0;
    cfg.jitter_copies = 3;
    std::mt19937_64 rng(4);
    std::vector<double> x{1.5, -2.0, 0.25};
    auto out = augment_recipe(x, ImageShape{}, cfg, rng);
    REQUIRE(out.size() == 3);
    for (const auto& c : out) CHECK(c == x);
}

TEST_CASE("recipe/sample-type mismatches are configuration errors") {
    AugmentConfig cfg;
    cfg.recipe = Recipe::Cifar11;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(augment_recipe({1.0, 2.0}, ImageShape{}, cfg, rng), ConfigError);

    cfg.recipe = Recipe::VectorJitter;
    CHECK_THROWS_AS(augment_recipe(ramp_image(kTiny), kTiny, cfg, rng), ConfigError);
}

TEST_CASE("synthetic data: well-separated 2D classes are linearly separable") {
    SplitDataset data = synthetic_gaussian_dataset(3, 2, 80, 40, 10.0, 11);
    CHECK(least_squares_accuracy(data.train, data.test) >= 0.99);
}

TEST_CASE("synthetic data is deterministic and respects the requested counts") {
    SplitDataset a = synthetic_gaussian_dataset(4, 5, 20, 10, 4.0, 7);
    SplitDataset b = synthetic_gaussian_dataset(4, 5, 20, 10, 4.0, 7);
    CHECK(a.train.inputs == b.train.inputs);
    CHECK(a.test.inputs == b.test.inputs);
    CHECK(a.train.labels == b.train.labels);
    CHECK(a.train.size() == 80);
    CHECK(a.test.size() == 40);

    SplitDataset tiny = synthetic_gaussian_dataset(2, 3, 1, 1, 4.0, 1);
    CHECK(tiny.train.size() == 2);
}

TEST_CASE("cifar binary loader decodes 3073-byte records to HWC order") {
    std::string path = "cifar_loader_test.bin";
    {
        std::ofstream out(path, std::ios::binary);
        // Two records; pixel value = plane index for easy checking.
        for (int rec = 0; rec < 2; ++rec) {
            out.put(static_cast<char>(rec + 1));  // label
            for (int plane = 0; plane < 3; ++plane)
                for (int p = 0; p < 1024; ++p)
                    out.put(static_cast<char>(plane * 10 + rec));
        }
    }
    Dataset d = load_cifar_batches({path}, Split::Train);
    REQUIRE(d.size() == 2);
    CHECK(d.labels == std::vector<int>({1, 2}));
    CHECK(d.shape.height == 32);
    CHECK(d.shape.channels == 3);
    // First pixel of record 0: channels R,G,B = 0,10,20.
    CHECK(d.inputs[0][0] == 0.0);
    CHECK(d.inputs[0][1] == 10.0);
    CHECK(d.inputs[0][2] == 20.0);
    std::remove(path.c_str());
}

TEST_CASE("csv loader reads label-first rows") {
    std::string path = "csv_loader_test.csv";
    {
        std::ofstream out(path);
        out << "2,0.5,-1.25\n0,3,4\n";
    }
    Dataset d = load_csv(path, Split::Test);
    REQUIRE(d.size() == 2);
    CHECK(d.labels == std::vector<int>({2, 0}));
    CHECK(d.inputs[0] == std::vector<double>({0.5, -1.25}));
    CHECK(d.inputs[1] == std::vector<double>({3.0, 4.0}));
    std::remove(path.c_str());
}
