#pragma once

#include <random>
#include <string>
#include <vector>

#include "icl/dataset.hpp"

namespace icl {

enum class Recipe { Cifar11, ImagenetStyle, VectorJitter };

struct AugmentConfig {
    Recipe recipe = Recipe::VectorJitter;
    double jitter_scale = 0.1;     // VectorJitter noise stddev
    std::size_t jitter_copies = 1; // new samples per input for VectorJitter
    std::size_t crop_pad = 4;      // reflect-pad margin before cropping

    static Recipe parse_recipe(const std::string& name);
    std::string recipe_name() const;
};

// Deterministic cores: the drawn parameter is explicit.
std::vector<double> brightness_with(const std::vector<double>& image, double delta);
std::vector<double> contrast_with(const std::vector<double>& image,
                                  const ImageShape& shape, double contrast);
std::vector<double> crop_at(const std::vector<double>& image, const ImageShape& shape,
                            std::size_t pad, std::size_t off_y, std::size_t off_x);
std::vector<double> mirror(const std::vector<double>& image, const ImageShape& shape);

// Sampling wrappers: one uniform draw each.
std::vector<double> augment_brightness(const std::vector<double>& image,
                                       std::mt19937_64& rng);
std::vector<double> augment_contrast(const std::vector<double>& image,
                                     const ImageShape& shape, std::mt19937_64& rng);
std::vector<double> random_crop(const std::vector<double>& image,
                                const ImageShape& shape, std::size_t pad,
                                std::mt19937_64& rng);

/// New samples generated from one input (the input itself is not in the
/// output). Cifar11 emits exactly 11; ImagenetStyle emits 1 (a randomly
/// transformed mirror); VectorJitter emits jitter_copies noisy copies.
std::vector<std::vector<double>> augment_recipe(const std::vector<double>& sample,
                                                const ImageShape& shape,
                                                const AugmentConfig& config,
                                                std::mt19937_64& rng);

}  // namespace icl
