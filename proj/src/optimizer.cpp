#include "icl/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace icl {

void OptimizerConfig::validate() const {
    if (base_lr <= 0.0)
        throw std::invalid_argument("OptimizerConfig: base_lr must be > 0");
    if (lr_drop_factor <= 1.0)
        throw std::invalid_argument("OptimizerConfig: lr_drop_factor must be > 1");
    if (lr_drop_every == 0)
        throw std::invalid_argument("OptimizerConfig: lr_drop_every must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("OptimizerConfig: momentum must be in [0,1)");
    if (weight_decay < 0.0 || noise_eta < 0.0 || noise_gamma < 0.0)
        throw std::invalid_argument("OptimizerConfig: negative hyperparameter");
    if (batch_size == 0)
        throw std::invalid_argument("OptimizerConfig: batch_size must be >= 1");
}

void ParameterSet::reset_momentum() {
    for (auto& [name, v] : momentum_) v = Matrix(v.rows(), v.cols());
}

void ParameterSet::add(const std::string& name, Matrix value) {
    if (has(name))
        throw std::invalid_argument("ParameterSet: duplicate name '" + name + "'");
    momentum_[name] = Matrix(value.rows(), value.cols());
    values_[name] = std::move(value);
    names_.push_back(name);
}

bool ParameterSet::has(const std::string& name) const {
    return values_.count(name) != 0;
}

Matrix& ParameterSet::at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end())
        throw std::invalid_argument("ParameterSet: unknown name '" + name + "'");
    return it->second;
}

const Matrix& ParameterSet::at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end())
        throw std::invalid_argument("ParameterSet: unknown name '" + name + "'");
    return it->second;
}

Matrix& ParameterSet::momentum(const std::string& name) {
    auto it = momentum_.find(name);
    if (it == momentum_.end())
        throw std::invalid_argument("ParameterSet: unknown name '" + name + "'");
    return it->second;
}

std::size_t ParameterSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : values_) n += m.size();
    return n;
}

bool ParameterSet::exactly_equals(const ParameterSet& other) const {
    if (names_ != other.names_) return false;
    for (const auto& name : names_)
        if (!exactly_equal(at(name), other.at(name))) return false;
    return true;
}

double lr_schedule(std::size_t epoch, const OptimizerConfig& config) {
    std::size_t drops = epoch / config.lr_drop_every;
    return config.base_lr * std::pow(config.lr_drop_factor, -static_cast<double>(drops));
}

double noise_stddev(std::size_t epoch, const OptimizerConfig& config) {
    if (config.noise_eta == 0.0) return 0.0;
    double variance = config.noise_eta /
                      std::pow(1.0 + static_cast<double>(epoch), config.noise_gamma);
    return std::sqrt(variance);
}

void sgd_step(ParameterSet& params, const GradientMap& grads,
              const OptimizerConfig& config, std::size_t epoch,
              std::mt19937_64& rng) {
    double lr = lr_schedule(epoch, config);
    double sigma = noise_stddev(epoch, config);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (const auto& name : params.names()) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;  // parameter untouched by this loss
        const Matrix& g = git->second;
        Matrix& p = params.at(name);
        Matrix& v = params.momentum(name);
        if (!g.same_shape(p))
            throw DimensionError("sgd_step: gradient shape " + g.shape() +
                                 " vs parameter " + p.shape() + " for '" + name + "'");
        if (!g.all_finite())
            throw NumericError("sgd_step: non-finite gradient for '" + name + "'");
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g[i];
            if (sigma > 0.0) gi += sigma * noise(rng);
            v[i] = config.momentum * v[i] - lr * (gi + config.weight_decay * p[i]);
            p[i] += v[i];
        }
    }
}

}  // namespace icl
