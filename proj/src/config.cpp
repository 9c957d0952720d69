#include "icl/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace icl {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!j.is_object())
        throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + where + "." + key + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    reject_unknown(j, {"dataset", "extractor", "step_size", "memory", "selection",
                       "loss", "optimizer", "epochs", "finetune_lr", "augmentation",
                       "seeds", "ablation", "upper_bound"},
                   "$");
    ExperimentConfig c;

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown(d, {"type", "classes", "dim", "train_per_class", "test_per_class",
                           "separation", "seed", "train_files", "test_files",
                           "normalization"},
                       "dataset");
        read(d, "type", c.dataset.type);
        read(d, "classes", c.dataset.classes);
        read(d, "dim", c.dataset.dim);
        read(d, "train_per_class", c.dataset.train_per_class);
        read(d, "test_per_class", c.dataset.test_per_class);
        read(d, "separation", c.dataset.separation);
        read(d, "seed", c.dataset.seed);
        read(d, "train_files", c.dataset.train_files);
        read(d, "test_files", c.dataset.test_files);
        read(d, "normalization", c.dataset.normalization);
    }
    if (j.contains("extractor")) {
        const auto& e = j.at("extractor");
        reject_unknown(e, {"hidden"}, "extractor");
        read(e, "hidden", c.extractor_hidden);
    }
    read(j, "step_size", c.step_size);
    if (j.contains("memory")) {
        const auto& m = j.at("memory");
        reject_unknown(m, {"mode", "K", "m"}, "memory");
        read(m, "mode", c.memory_mode);
        if (m.contains("K") && m.contains("m"))
            throw ConfigError("config: memory.K and memory.m are mutually exclusive");
        if (m.contains("K")) c.memory_budget = m.at("K").get<std::size_t>();
        if (m.contains("m")) c.memory_budget = m.at("m").get<std::size_t>();
    }
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        reject_unknown(s, {"strategy", "seed"}, "selection");
        read(s, "strategy", c.selection);
        read(s, "seed", c.selection_seed);
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        reject_unknown(l, {"temperature"}, "loss");
        read(l, "temperature", c.temperature);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        reject_unknown(o, {"base_lr", "lr_drop_factor", "lr_drop_every", "momentum",
                           "weight_decay", "noise_eta", "noise_gamma", "batch_size"},
                       "optimizer");
        read(o, "base_lr", c.optimizer.base_lr);
        read(o, "lr_drop_factor", c.optimizer.lr_drop_factor);
        read(o, "lr_drop_every", c.optimizer.lr_drop_every);
        read(o, "momentum", c.optimizer.momentum);
        read(o, "weight_decay", c.optimizer.weight_decay);
        read(o, "noise_eta", c.optimizer.noise_eta);
        read(o, "noise_gamma", c.optimizer.noise_gamma);
        read(o, "batch_size", c.optimizer.batch_size);
    }
    if (j.contains("epochs")) {
        const auto& e = j.at("epochs");
        reject_unknown(e, {"main", "finetune"}, "epochs");
        read(e, "main", c.main_epochs);
        read(e, "finetune", c.finetune_epochs);
    }
    read(j, "finetune_lr", c.finetune_lr);
    if (j.contains("augmentation")) {
        const auto& a = j.at("augmentation");
        reject_unknown(a, {"recipe", "jitter_scale", "jitter_copies", "crop_pad"},
                       "augmentation");
        read(a, "recipe", c.augment_recipe);
        read(a, "jitter_scale", c.jitter_scale);
        read(a, "jitter_copies", c.jitter_copies);
        read(a, "crop_pad", c.crop_pad);
    }
    read(j, "seeds", c.seeds);
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        reject_unknown(a, {"disable_augmentation", "disable_finetune", "disable_memory",
                           "disable_distillation"},
                       "ablation");
        read(a, "disable_augmentation", c.disable_augmentation);
        read(a, "disable_finetune", c.disable_finetune);
        read(a, "disable_memory", c.disable_memory);
        read(a, "disable_distillation", c.disable_distillation);
    }
    read(j, "upper_bound", c.run_upper_bound);
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["dataset"] = {{"type", dataset.type},
                    {"classes", dataset.classes},
                    {"dim", dataset.dim},
                    {"train_per_class", dataset.train_per_class},
                    {"test_per_class", dataset.test_per_class},
                    {"separation", dataset.separation},
                    {"seed", dataset.seed},
                    {"train_files", dataset.train_files},
                    {"test_files", dataset.test_files},
                    {"normalization", dataset.normalization}};
    j["extractor"] = {{"hidden", extractor_hidden}};
    j["step_size"] = step_size;
    j["memory"] = {{"mode", memory_mode}};
    j["memory"][memory_mode == "fixed-total" ? "K" : "m"] = memory_budget;
    j["selection"] = {{"strategy", selection}, {"seed", selection_seed}};
    j["loss"] = {{"temperature", temperature}};
    j["optimizer"] = {{"base_lr", optimizer.base_lr},
                      {"lr_drop_factor", optimizer.lr_drop_factor},
                      {"lr_drop_every", optimizer.lr_drop_every},
                      {"momentum", optimizer.momentum},
                      {"weight_decay", optimizer.weight_decay},
                      {"noise_eta", optimizer.noise_eta},
                      {"noise_gamma", optimizer.noise_gamma},
                      {"batch_size", optimizer.batch_size}};
    j["epochs"] = {{"main", main_epochs}, {"finetune", finetune_epochs}};
    j["finetune_lr"] = finetune_lr;
    j["augmentation"] = {{"recipe", augment_recipe},
                         {"jitter_scale", jitter_scale},
                         {"jitter_copies", jitter_copies},
                         {"crop_pad", crop_pad}};
    j["seeds"] = seeds;
    j["ablation"] = {{"disable_augmentation", disable_augmentation},
                     {"disable_finetune", disable_finetune},
                     {"disable_memory", disable_memory},
                     {"disable_distillation", disable_distillation}};
    j["upper_bound"] = run_upper_bound;
    return j;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw StateError("cannot write config: " + path);
    out << to_json().dump(2) << "\n";
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> warnings;
    if (step_size == 0) throw ConfigError("config: step_size must be >= 1");
    if (temperature <= 0.0) throw ConfigError("config: loss.temperature must be > 0");
    if (memory_mode != "fixed-total" && memory_mode != "fixed-per-class")
        throw ConfigError("config: memory.mode must be fixed-total or fixed-per-class");
    if (memory_budget == 0) throw ConfigError("config: memory budget must be >= 1");
    if (finetune_lr <= 0.0) throw ConfigError("config: finetune_lr must be > 0");
    if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
    SelectionStrategy::parse(selection, selection_seed);
    AugmentConfig::parse_recipe(augment_recipe);
    optimizer.validate();
    if (dataset.type == "synthetic") {
        if (dataset.classes < 2)
            throw ConfigError("config: synthetic dataset needs >= 2 classes");
    } else if (dataset.type == "cifar-binary" || dataset.type == "csv") {
        if (dataset.train_files.empty() || dataset.test_files.empty())
            throw ConfigError("config: file-backed dataset needs train_files and test_files");
    } else {
        throw ConfigError("config: unknown dataset.type '" + dataset.type + "'");
    }
    parse_normalization_mode(dataset.normalization);

    std::size_t classes = dataset.type == "synthetic" ? dataset.classes : 0;
    if (memory_mode == "fixed-total" && classes > 0 && memory_budget < classes)
        warnings.push_back("memory.K (" + std::to_string(memory_budget) +
                           ") is smaller than the class count (" +
                           std::to_string(classes) +
                           "); later steps will store zero exemplars per class");
    if (classes > 0 && step_size > classes)
        warnings.push_back("step_size exceeds the class count; single batch");
    return warnings;
}

std::string ExperimentConfig::digest() const {
    std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MemoryMode ExperimentConfig::memory_mode_enum() const {
    return memory_mode == "fixed-total" ? MemoryMode::FixedTotal
                                        : MemoryMode::FixedPerClass;
}

PipelineConfig ExperimentConfig::pipeline_config() const {
    PipelineConfig p;
    p.optimizer = optimizer;
    p.loss.temperature = temperature;
    p.main_epochs = main_epochs;
    p.finetune_epochs = finetune_epochs;
    p.finetune_lr = finetune_lr;
    p.augment.recipe = AugmentConfig::parse_recipe(augment_recipe);
    p.augment.jitter_scale = jitter_scale;
    p.augment.jitter_copies = jitter_copies;
    p.augment.crop_pad = crop_pad;
    p.selection = SelectionStrategy::parse(selection, selection_seed);
    p.disable_augmentation = disable_augmentation;
    p.disable_finetune = disable_finetune;
    p.disable_memory = disable_memory;
    p.disable_distillation = disable_distillation;
    return p;
}

SplitDataset ExperimentConfig::build_dataset() const {
    SplitDataset data;
    if (dataset.type == "synthetic") {
        data = synthetic_gaussian_dataset(dataset.classes, dataset.dim,
                                          dataset.train_per_class,
                                          dataset.test_per_class,
                                          dataset.separation, dataset.seed);
    } else if (dataset.type == "cifar-binary") {
        data.train = load_cifar_batches(dataset.train_files, Split::Train);
        data.test = load_cifar_batches(dataset.test_files, Split::Test);
    } else if (dataset.type == "csv") {
        data.train = load_csv(dataset.train_files.at(0), Split::Train);
        data.test = load_csv(dataset.test_files.at(0), Split::Test);
    } else {
        throw ConfigError("config: unknown dataset.type '" + dataset.type + "'");
    }
    return normalize(std::move(data), parse_normalization_mode(dataset.normalization));
}

}  // namespace icl
