#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "icl/matrix.hpp"

namespace icl {

struct OptimizerConfig {
    double base_lr = 0.1;
    double lr_drop_factor = 10.0;
    std::size_t lr_drop_every = 10;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double noise_eta = 0.3;     // eta: initial gradient-noise variance
    double noise_gamma = 0.55;  // gamma: noise decay exponent
    std::size_t batch_size = 128;

    void validate() const;
};

/// Named parameter collection with per-parameter momentum buffers.
/// Iteration order is the insertion order (stable across runs).
class ParameterSet {
public:
    void add(const std::string& name, Matrix value);
    bool has(const std::string& name) const;
    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    Matrix& momentum(const std::string& name);
    void reset_momentum();

    const std::vector<std::string>& names() const { return names_; }
    std::size_t parameter_count() const;

    bool exactly_equals(const ParameterSet& other) const;

private:
    std::vector<std::string> names_;
    std::map<std::string, Matrix> values_;
    std::map<std::string, Matrix> momentum_;
};

using GradientMap = std::map<std::string, Matrix>;

/// base_lr / drop_factor^(floor(epoch / drop_every))
double lr_schedule(std::size_t epoch, const OptimizerConfig& config);

/// Gradient-noise standard deviation at epoch t: sqrt(eta / (1+t)^gamma).
double noise_stddev(std::size_t epoch, const OptimizerConfig& config);

/// SGD with momentum, weight decay and annealed Gaussian gradient noise.
/// Noise is added to the raw gradient first, then
///   v <- momentum * v - lr * (g + weight_decay * p);  p <- p + v.
/// Throws NumericError if any gradient is non-finite.
void sgd_step(ParameterSet& params, const GradientMap& grads,
              const OptimizerConfig& config, std::size_t epoch,
              std::mt19937_64& rng);

}  // namespace icl
