// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>

#include "augforge/corpus.hpp"
#include "augforge/error.hpp"
#include "augforge/hashing.hpp"

namespace augforge::classifier {

using nlohmann::json;

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

SparseVector featurize(const Tokens& tokens, std::size_t dim) {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : tokens) counts[feature_index(t, dim)] += 1.0;
    return {counts.begin(), counts.end()};
}

void check_training_set(const Examples& train) {
    if (train.empty()) throw PreconditionError("fit_classifier: empty training set");
    const auto hate = count_label(train, Label::hate);
    if (hate == 0 || hate == train.size())
        throw PreconditionError("fit_classifier: training set must contain both classes");
}

}  // namespace

std::string_view to_string(Backend backend) {
    return backend == Backend::reference_linear ? "reference_linear" : "external";
}

Backend parse_backend(std::string_view text) {
    if (text == "reference_linear") return Backend::reference_linear;
    if (text == "external") return Backend::external;
    throw InputError("unknown classifier backend '" + std::string(text) + "'");
}

void ClassifierSpec::validate() const {
    if (feature_dim < 2) throw PreconditionError("classifier feature_dim must be at least 2");
    if (feature_dim > (std::size_t{1} << 32)) throw PreconditionError("classifier feature_dim exceeds 2^32");
    if (epochs < 1) throw PreconditionError("classifier epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw PreconditionError("classifier learning_rate must be positive");
}

std::uint32_t feature_index(const std::string& token, std::size_t feature_dim) {
    return static_cast<std::uint32_t>(fnv1a64(token) % feature_dim);
}

LinearModel::LinearModel(std::size_t feature_dim, SparseVector weights, double bias)
    : feature_dim_(feature_dim), weights_(std::move(weights)), bias_(bias) {
    std::sort(weights_.begin(), weights_.end());
}

double LinearModel::weight(std::uint32_t feature) const {
    auto it = std::lower_bound(weights_.begin(), weights_.end(), std::pair<std::uint32_t, double>{feature, -INFINITY});
    return it != weights_.end() && it->first == feature ? it->second : 0.0;
}

double LinearModel::score(const Tokens& tokens) const {
    double z = bias_;
    for (const auto& [f, x] : featurize(tokens, feature_dim_)) z += weight(f) * x;
    return sigmoid(z);
}

LinearModel LinearModel::train(const Examples& train, const ClassifierSpec& spec) {
    // Only features present in the training set can move away from zero, so
    // descent runs over a compact index of those features.
    std::map<std::uint32_t, std::uint32_t> compact;
    std::vector<SparseVector> rows;
    rows.reserve(train.size());
    for (const auto& e : train) {
        auto row = featurize(e.tokens, spec.feature_dim);
        for (const auto& [f, x] : row) compact.emplace(f, 0);
        rows.push_back(std::move(row));
    }
    std::uint32_t next = 0;
    for (auto& [f, idx] : compact) idx = next++;
    for (auto& row : rows)
        for (auto& [f, x] : row) f = compact.at(f);

    const double n = static_cast<double>(train.size());
    const double n_hate = static_cast<double>(count_label(train, Label::hate));
    double w_hate = 1.0, w_non = 1.0;
    if (spec.class_weights) {
        w_hate = n / (2.0 * n_hate);
        w_non = n / (2.0 * (n - n_hate));
    }

    std::vector<double> w(compact.size(), 0.0);
    std::vector<double> grad(compact.size());
    double bias = 0.0;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double z = bias;
            for (const auto& [f, x] : rows[i]) z += w[f] * x;
            const bool hate = train[i].label == Label::hate;
            const double residual = (sigmoid(z) - (hate ? 1.0 : 0.0)) * (hate ? w_hate : w_non);
            for (const auto& [f, x] : rows[i]) grad[f] += residual * x;
            grad_bias += residual;
        }
        const double step = spec.learning_rate / n;
        for (std::size_t f = 0; f < w.size(); ++f) w[f] -= step * grad[f];
        bias -= step * grad_bias;
    }

    SparseVector weights;
    for (const auto& [f, idx] : compact)
        if (w[idx] != 0.0) weights.emplace_back(f, w[idx]);
    return LinearModel(spec.feature_dim, std::move(weights), bias);
}

ConfidenceClassifier fit_classifier(const Examples& train, const ClassifierSpec& spec) {
    spec.validate();
    check_training_set(train);
    if (spec.backend != Backend::reference_linear)
        throw PreconditionError("fit_classifier: external backend requires a client");
    return {spec, train.size(), std::make_shared<const LinearModel>(LinearModel::train(train, spec))};
}

ConfidenceClassifier fit_classifier(const Examples& train, const ClassifierSpec& spec,
                                    std::shared_ptr<backend::Client> client) {
    spec.validate();
    check_training_set(train);
    if (!client) throw PreconditionError("fit_classifier: null backend client");
    std::vector<std::string> texts;
    std::vector<Label> labels;
    for (const auto& e : train) {
        texts.push_back(corpus::join_tokens(e.tokens));
        labels.push_back(e.label);
    }
    client->fit(texts, labels);
    ClassifierSpec s = spec;
    s.backend = Backend::external;
    return {s, train.size(), std::move(client)};
}

std::vector<double> score(const ConfidenceClassifier& clf, const std::vector<Tokens>& texts) {
    if (texts.empty()) return {};
    if (const auto* model = std::get_if<std::shared_ptr<const LinearModel>>(&clf.model)) {
        std::vector<double> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back((*model)->score(t));
        return out;
    }
    std::vector<std::string> joined;
    joined.reserve(texts.size());
    for (const auto& t : texts) joined.push_back(corpus::join_tokens(t));
    return std::get<std::shared_ptr<backend::Client>>(clf.model)->remote_score(joined);
}

std::vector<Label> predict_from_scores(std::span<const double> scores, double decision_threshold) {
    if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
        throw PreconditionError("predict: decision threshold must lie in [0,1]");
    std::vector<Label> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s >= decision_threshold ? Label::hate : Label::non_hate);
    return out;
}

std::vector<Label> predict(const ConfidenceClassifier& clf, const std::vector<Tokens>& texts,
                           double decision_threshold) {
    if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
        throw PreconditionError("predict: decision threshold must lie in [0,1]");
    auto scores = score(clf, texts);
    return predict_from_scores(scores, decision_threshold);
}

// ---------------------------------------------------------------------------
// Persistence

std::string serialize_classifier(const ConfidenceClassifier& clf) {
    const auto* model = std::get_if<std::shared_ptr<const LinearModel>>(&clf.model);
    if (!model) throw PreconditionError("external classifiers live in their backend and cannot be saved");
    json weights = json::array();
    for (const auto& [f, w] : (*model)->weights()) weights.push_back({f, w});
    json doc = {{"format", "augforge-classifier"},
                {"format_version", kClassifierFormatVersion},
                {"spec",
                 {{"backend", std::string(to_string(clf.spec.backend))},
                  {"feature_dim", clf.spec.feature_dim},
                  {"epochs", clf.spec.epochs},
                  {"learning_rate", clf.spec.learning_rate},
                  {"seed", clf.spec.seed},
                  {"class_weights", clf.spec.class_weights}}},
                {"train_size", clf.train_size},
                {"bias", (*model)->bias()},
                {"weights", weights}};
    return doc.dump() + "\n";
}

ConfidenceClassifier deserialize_classifier(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed classifier artifact: ") + e.what());
    }
    if (doc.value("format", std::string{}) != "augforge-classifier") throw InputError("not a classifier artifact");
    const int version = doc.at("format_version").get<int>();
    if (version != kClassifierFormatVersion)
        throw InputError("unsupported classifier format version " + std::to_string(version));
    ConfidenceClassifier clf;
    const auto& s = doc.at("spec");
    clf.spec.backend = parse_backend(s.at("backend").get<std::string>());
    clf.spec.feature_dim = s.at("feature_dim").get<std::size_t>();
    clf.spec.epochs = s.at("epochs").get<int>();
    clf.spec.learning_rate = s.at("learning_rate").get<double>();
    clf.spec.seed = s.at("seed").get<std::uint64_t>();
    clf.spec.class_weights = s.at("class_weights").get<bool>();
    clf.train_size = doc.at("train_size").get<std::size_t>();
    SparseVector weights;
    for (const auto& p : doc.at("weights")) weights.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<double>());
    clf.model = std::make_shared<const LinearModel>(clf.spec.feature_dim, std::move(weights),
                                                    doc.at("bias").get<double>());
    return clf;
}

void save_classifier(const std::filesystem::path& path, const ConfidenceClassifier& clf) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << serialize_classifier(clf);
}

ConfidenceClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_classifier(text);
}

}  // namespace augforge::classifier
