#include "icl/model.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace icl {

namespace {

Matrix init_dense(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = u(rng);
    return w;
}

std::string layer_w(std::size_t i) { return "extractor.W" + std::to_string(i); }
std::string layer_b(std::size_t i) { return "extractor.b" + std::to_string(i); }
std::string head_w(std::size_t i) { return "head" + std::to_string(i) + ".W"; }
std::string head_b(std::size_t i) { return "head" + std::to_string(i) + ".b"; }

}  // namespace

IncrementalNet::IncrementalNet(MlpSpec spec, std::mt19937_64& rng)
    : spec_(std::move(spec)) {
    if (spec_.input_dim == 0)
        throw ConfigError("IncrementalNet: input_dim must be >= 1");
    std::size_t in = spec_.input_dim;
    for (std::size_t i = 0; i < spec_.hidden_sizes.size(); ++i) {
        std::size_t out = spec_.hidden_sizes[i];
        params_.add(layer_w(i), init_dense(in, out, rng));
        params_.add(layer_b(i), Matrix(1, out));
        in = out;
    }
}

std::size_t IncrementalNet::total_classes() const {
    std::size_t n = 0;
    for (const auto& h : heads_) n += h.class_ids.size();
    return n;
}

std::vector<int> IncrementalNet::seen_classes() const {
    std::vector<int> out;
    for (const auto& h : heads_)
        out.insert(out.end(), h.class_ids.begin(), h.class_ids.end());
    return out;
}

std::map<int, std::size_t> IncrementalNet::class_to_column() const {
    std::map<int, std::size_t> m;
    std::size_t col = 0;
    for (const auto& h : heads_)
        for (int c : h.class_ids) m[c] = col++;
    return m;
}

std::map<int, std::size_t> IncrementalNet::class_to_head() const {
    std::map<int, std::size_t> m;
    for (std::size_t i = 0; i < heads_.size(); ++i)
        for (int c : heads_[i].class_ids) m[c] = i;
    return m;
}

void IncrementalNet::add_classification_head(const std::vector<int>& new_class_ids,
                                             std::mt19937_64& rng) {
    if (new_class_ids.empty())
        throw ConfigError("add_classification_head: empty class list");
    std::set<int> existing;
    for (const auto& h : heads_)
        existing.insert(h.class_ids.begin(), h.class_ids.end());
    std::set<int> incoming;
    for (int c : new_class_ids) {
        if (existing.count(c))
            throw ConfigError("add_classification_head: class " + std::to_string(c) +
                              " already has a head");
        if (!incoming.insert(c).second)
            throw ConfigError("add_classification_head: duplicate class " +
                              std::to_string(c) + " in new batch");
    }
    std::size_t idx = heads_.size();
    params_.add(head_w(idx), init_dense(feature_dim(), new_class_ids.size(), rng));
    params_.add(head_b(idx), Matrix(1, new_class_ids.size()));
    heads_.push_back(HeadSpec{new_class_ids});
}

TapeForward IncrementalNet::forward_on_tape(Tape& tape, const Matrix& batch) const {
    if (heads_.empty())
        throw ConfigError("forward: net has no classification heads");
    if (batch.cols() != spec_.input_dim)
        throw DimensionError("forward: batch width " + std::to_string(batch.cols()) +
                             " vs input_dim " + std::to_string(spec_.input_dim));
    TapeForward tf;
    auto x = tape.leaf(batch);
    for (const auto& name : params_.names())
        tf.param_nodes[name] = tape.leaf(params_.at(name), /*requires_grad=*/true);

    auto h = x;
    for (std::size_t i = 0; i < spec_.hidden_sizes.size(); ++i) {
        h = tape.add_row_vector(tape.matmul(h, tf.param_nodes.at(layer_w(i))),
                                tf.param_nodes.at(layer_b(i)));
        h = tape.relu(h);
    }
    tf.features = h;
    for (std::size_t i = 0; i < heads_.size(); ++i) {
        auto logits = tape.add_row_vector(
            tape.matmul(h, tf.param_nodes.at(head_w(i))), tf.param_nodes.at(head_b(i)));
        tf.per_head.push_back(logits);
    }
    tf.concatenated = heads_.size() == 1 ? tf.per_head[0]
                                         : tape.concat_cols(tf.per_head);
    return tf;
}

ForwardResult IncrementalNet::forward(const Matrix& batch) const {
    Tape tape;
    TapeForward tf = forward_on_tape(tape, batch);
    ForwardResult r;
    r.features = tape.value(tf.features);
    for (auto id : tf.per_head) r.per_head.push_back(tape.value(id));
    r.concatenated = tape.value(tf.concatenated);
    return r;
}

std::vector<std::string> IncrementalNet::extractor_param_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < spec_.hidden_sizes.size(); ++i) {
        out.push_back(layer_w(i));
        out.push_back(layer_b(i));
    }
    return out;
}

nlohmann::json IncrementalNet::to_json() const {
    nlohmann::json j;
    j["input_dim"] = spec_.input_dim;
    j["hidden_sizes"] = spec_.hidden_sizes;
    j["heads"] = nlohmann::json::array();
    for (const auto& h : heads_) j["heads"].push_back({{"class_ids", h.class_ids}});
    nlohmann::json params = nlohmann::json::object();
    for (const auto& name : params_.names()) {
        const Matrix& m = params_.at(name);
        params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.data()}};
    }
    j["params"] = params;
    j["param_order"] = params_.names();
    return j;
}

IncrementalNet IncrementalNet::from_json(const nlohmann::json& j) {
    IncrementalNet net;
    net.spec_.input_dim = j.at("input_dim").get<std::size_t>();
    net.spec_.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    for (const auto& h : j.at("heads"))
        net.heads_.push_back(HeadSpec{h.at("class_ids").get<std::vector<int>>()});
    for (const auto& name : j.at("param_order").get<std::vector<std::string>>()) {
        const auto& pj = j.at("params").at(name);
        Matrix m(pj.at("rows").get<std::size_t>(), pj.at("cols").get<std::size_t>());
        m.data() = pj.at("values").get<std::vector<double>>();
        net.params_.add(name, std::move(m));
    }
    return net;
}

void IncrementalNet::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw StateError("cannot write checkpoint: " + path);
    out << to_json().dump(2) << "\n";
}

IncrementalNet IncrementalNet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StateError("cannot read checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

TeacherSnapshot::TeacherSnapshot(const IncrementalNet& net, std::size_t old_head_count)
    : frozen_(net), old_heads_(old_head_count) {
    if (old_heads_ == 0 || old_heads_ > frozen_.heads().size())
        throw ConfigError("TeacherSnapshot: bad old head count " +
                          std::to_string(old_head_count));
}

std::vector<Matrix> TeacherSnapshot::teacher_logits(const Matrix& batch) const {
    ForwardResult r = frozen_.forward(batch);
    std::vector<Matrix> out(r.per_head.begin(), r.per_head.begin() + old_heads_);
    return out;
}

}  // namespace icl
