#include "icl/augment.hpp"

#include <algorithm>
#include <cmath>

namespace icl {

namespace {

double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

void check_image(const std::vector<double>& image, const ImageShape& shape) {
    if (!shape.is_image() || image.size() != shape.size())
        throw ConfigError("augmentation: sample is not an image of the given shape");
}

// Reflect index i into [0, n).
std::size_t reflect(long i, long n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return static_cast<std::size_t>(i);
}

}  // namespace

Recipe AugmentConfig::parse_recipe(const std::string& name) {
    if (name == "cifar-11") return Recipe::Cifar11;
    if (name == "imagenet-style") return Recipe::ImagenetStyle;
    if (name == "vector") return Recipe::VectorJitter;
    throw ConfigError("unknown augmentation recipe '" + name + "'");
}

std::string AugmentConfig::recipe_name() const {
    switch (recipe) {
    case Recipe::Cifar11: return "cifar-11";
    case Recipe::ImagenetStyle: return "imagenet-style";
    case Recipe::VectorJitter: return "vector";
    }
    return "?";
}

std::vector<double> brightness_with(const std::vector<double>& image, double delta) {
    std::vector<double> out(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = clamp255(image[i] + delta);
    return out;
}

std::vector<double> contrast_with(const std::vector<double>& image,
                                  const ImageShape& shape, double contrast) {
    check_image(image, shape);
    std::vector<double> mean(shape.channels, 0.0);
    std::size_t pixels = shape.height * shape.width;
    for (std::size_t p = 0; p < pixels; ++p)
        for (std::size_t ch = 0; ch < shape.channels; ++ch)
            mean[ch] += image[p * shape.channels + ch];
    for (double& v : mean) v /= static_cast<double>(pixels);
    std::vector<double> out(image.size());
    for (std::size_t p = 0; p < pixels; ++p)
        for (std::size_t ch = 0; ch < shape.channels; ++ch) {
            double v = image[p * shape.channels + ch];
            out[p * shape.channels + ch] = clamp255((v - mean[ch]) * contrast + mean[ch]);
        }
    return out;
}

std::vector<double> crop_at(const std::vector<double>& image, const ImageShape& shape,
                            std::size_t pad, std::size_t off_y, std::size_t off_x) {
    check_image(image, shape);
    if (off_y > 2 * pad || off_x > 2 * pad)
        throw std::invalid_argument("crop_at: offset outside padded range");
    long h = static_cast<long>(shape.height);
    long w = static_cast<long>(shape.width);
    std::vector<double> out(image.size());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            // Source coordinate in the reflect-padded image.
            std::size_t sy = reflect(y + static_cast<long>(off_y) - static_cast<long>(pad), h);
            std::size_t sx = reflect(x + static_cast<long>(off_x) - static_cast<long>(pad), w);
            for (std::size_t ch = 0; ch < shape.channels; ++ch)
                out[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + ch] =
                    image[(sy * shape.width + sx) * shape.channels + ch];
        }
    return out;
}

std::vector<double> mirror(const std::vector<double>& image, const ImageShape& shape) {
    check_image(image, shape);
    std::vector<double> out(image.size());
    for (std::size_t y = 0; y < shape.height; ++y)
        for (std::size_t x = 0; x < shape.width; ++x)
            for (std::size_t ch = 0; ch < shape.channels; ++ch)
                out[(y * shape.width + x) * shape.channels + ch] =
                    image[(y * shape.width + (shape.width - 1 - x)) * shape.channels + ch];
    return out;
}

std::vector<double> augment_brightness(const std::vector<double>& image,
                                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-63.0, 63.0);
    return brightness_with(image, u(rng));
}

std::vector<double> augment_contrast(const std::vector<double>& image,
                                     const ImageShape& shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 1.8);
    return contrast_with(image, shape, u(rng));
}

std::vector<double> random_crop(const std::vector<double>& image,
                                const ImageShape& shape, std::size_t pad,
                                std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> u(0, 2 * pad);
    std::size_t oy = u(rng), ox = u(rng);
    return crop_at(image, shape, pad, oy, ox);
}

std::vector<std::vector<double>> augment_recipe(const std::vector<double>& sample,
                                                const ImageShape& shape,
                                                const AugmentConfig& config,
                                                std::mt19937_64& rng) {
    std::vector<std::vector<double>> out;
    switch (config.recipe) {
    case Recipe::Cifar11: {
        check_image(sample, shape);
        auto bright = augment_brightness(sample, rng);
        auto contr = augment_contrast(sample, shape, rng);
        auto crop_o = random_crop(sample, shape, config.crop_pad, rng);
        auto crop_b = random_crop(bright, shape, config.crop_pad, rng);
        auto crop_c = random_crop(contr, shape, config.crop_pad, rng);
        out = {bright, contr, crop_o, crop_b, crop_c};
        // Mirrors of the five generated samples plus the original: 11 total.
        std::size_t generated = out.size();
        for (std::size_t i = 0; i < generated; ++i)
            out.push_back(mirror(out[i], shape));
        out.push_back(mirror(sample, shape));
        break;
    }
    case Recipe::ImagenetStyle: {
        check_image(sample, shape);
        auto m = mirror(sample, shape);
        // One randomly transformed mirror per input doubles the set.
        std::uniform_int_distribution<int> coin(0, 1);
        out.push_back(coin(rng) == 0 ? augment_brightness(m, rng)
                                     : augment_contrast(m, shape, rng));
        break;
    }
    case Recipe::VectorJitter: {
        if (shape.is_image())
            throw ConfigError("vector recipe applied to an image sample");
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t k = 0; k < config.jitter_copies; ++k) {
            std::vector<double> x = sample;
            for (double& v : x) v += config.jitter_scale * gauss(rng);
            out.push_back(std::move(x));
        }
        break;
    }
    }
    return out;
}

}  // namespace icl
