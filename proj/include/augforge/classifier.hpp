// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "augforge/backend_protocol.hpp"
#include "augforge/types.hpp"

namespace augforge::classifier {

enum class Backend { reference_linear, external };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);

struct ClassifierSpec {
    Backend backend = Backend::reference_linear;
    /// Size of the hashed unigram feature space.
    std::size_t feature_dim = std::size_t{1} << 18;
    int epochs = 200;
    double learning_rate = 1.0;
    /// Recorded for provenance; full-batch descent from zero weights draws
    /// no random numbers.
    std::uint64_t seed = 0;
    /// Inverse-frequency class weights. Off by default.
    bool class_weights = false;

    void validate() const;
    bool operator==(const ClassifierSpec&) const = default;
};

/// Logistic regression over hashed unigram counts plus a bias.
class LinearModel {
public:
    LinearModel(std::size_t feature_dim, std::vector<std::pair<std::uint32_t, double>> weights, double bias);

    static LinearModel train(const Examples& train, const ClassifierSpec& spec);

    /// Probability of the hate class.
    double score(const Tokens& tokens) const;

    std::size_t feature_dim() const { return feature_dim_; }
    double bias() const { return bias_; }
    /// Non-zero weights sorted by feature index.
    const std::vector<std::pair<std::uint32_t, double>>& weights() const { return weights_; }

private:
    double weight(std::uint32_t feature) const;

    std::size_t feature_dim_;
    std::vector<std::pair<std::uint32_t, double>> weights_;
    double bias_;
};

/// Hashed feature index of a token.
std::uint32_t feature_index(const std::string& token, std::size_t feature_dim);

/// A trained binary classifier. Immutable and shareable for scoring when
/// backed by the reference model; external classifiers are bound to one
/// backend client.
struct ConfidenceClassifier {
    ClassifierSpec spec;
    std::size_t train_size = 0;
    std::variant<std::shared_ptr<const LinearModel>, std::shared_ptr<backend::Client>> model;
};

ConfidenceClassifier fit_classifier(const Examples& train, const ClassifierSpec& spec);
ConfidenceClassifier fit_classifier(const Examples& train, const ClassifierSpec& spec,
                                    std::shared_ptr<backend::Client> client);

std::vector<double> score(const ConfidenceClassifier& clf, const std::vector<Tokens>& texts);

inline constexpr double kDefaultDecisionThreshold = 0.5;

/// hate iff score >= decision_threshold.
std::vector<Label> predict(const ConfidenceClassifier& clf, const std::vector<Tokens>& texts,
                           double decision_threshold = kDefaultDecisionThreshold);
std::vector<Label> predict_from_scores(std::span<const double> scores,
                                       double decision_threshold = kDefaultDecisionThreshold);

inline constexpr int kClassifierFormatVersion = 1;

std::string serialize_classifier(const ConfidenceClassifier& clf);
ConfidenceClassifier deserialize_classifier(std::string_view text);
void save_classifier(const std::filesystem::path& path, const ConfidenceClassifier& clf);
ConfidenceClassifier load_classifier(const std::filesystem::path& path);

}  // namespace augforge::classifier
