// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "augforge/augment.hpp"
#include "augforge/backend_protocol.hpp"
#include "augforge/classifier.hpp"
#include "augforge/corpus.hpp"
#include "augforge/filter.hpp"
#include "augforge/generator.hpp"

namespace augforge::experiment {

inline constexpr int kManifestSchemaVersion = 1;

enum class Protocol { within, one_vs_one, four_vs_one };
std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

/// Basis for size-weighted one-vs-one averages.
enum class Weighting { total_size, train_size };
std::string_view to_string(Weighting weighting);
Weighting parse_weighting(std::string_view text);

/// How the fidelity filter's classifier relates to the evaluated models.
/// `shared` reuses the first model's spec and base-cell seed on gold train.
enum class FilterWiring { independent, shared };
std::string_view to_string(FilterWiring wiring);
FilterWiring parse_filter_wiring(std::string_view text);

struct DatasetInput {
    /// A single file split by the pipeline...
    std::filesystem::path path;
    /// ...or a fixed train/test pair.
    std::filesystem::path train;
    std::filesystem::path test;

    bool presplit() const { return !train.empty(); }
};

struct ConditionSpec {
    augment::Condition condition = augment::Condition::base;
    std::size_t level = 0;

    bool operator==(const ConditionSpec&) const = default;
};

struct ModelSpec {
    std::string id;
    classifier::ClassifierSpec spec;
    /// Backend id for external models.
    std::string backend;
};

struct BackendSpec {
    std::vector<std::string> command;
    backend::Timeouts timeouts;
};

struct AnalysisOptions {
    bool enabled = true;
    std::size_t top_n = 20;
    std::size_t min_count = 3;
    double smoothing_k = 0.5;
};

struct ExperimentManifest {
    int schema_version = kManifestSchemaVersion;
    std::string name;
    std::vector<std::string> datasets;
    std::map<std::string, DatasetInput> inputs;
    corpus::DatasetCatalog catalog = corpus::DatasetCatalog::defaults();
    Protocol protocol = Protocol::within;
    std::vector<ConditionSpec> conditions;
    /// One-vs-one (train, test) pairs; empty means every ordered pair.
    std::vector<std::pair<std::string, std::string>> pairs;
    double split_ratio = 0.8;
    std::size_t max_tokens = corpus::kDefaultMaxTokens;
    /// Template applied to every (dataset, class) generator.
    generator::GeneratorSpec generator;
    std::string generator_backend;
    classifier::ClassifierSpec filter_classifier;
    std::string filter_backend;
    filter::FilterConfig filter;
    FilterWiring filter_wiring = FilterWiring::independent;
    std::vector<ModelSpec> models;
    bool dedupe = true;
    augment::SelectionRule selection = augment::SelectionRule::confidence_desc;
    Weighting weighting = Weighting::total_size;
    /// Samples requested per missing synthetic example in a supply round.
    double oversample = 2.0;
    int max_supply_rounds = 6;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir = "runs";
    std::map<std::string, BackendSpec> backends;
    double decision_threshold = classifier::kDefaultDecisionThreshold;
    AnalysisOptions analysis;
    /// Folds for the stability protocol.
    int folds = 5;
    unsigned threads = 1;

    /// Synthetic levels in ascending order.
    std::vector<std::size_t> levels() const;
};

/// Parses a manifest; relative paths resolve against base_dir.
ExperimentManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest load_manifest(const std::filesystem::path& path);

/// Every problem at once; empty when the manifest is valid.
std::vector<std::string> manifest_problems(const ExperimentManifest& manifest);

/// Throws ValidationError listing every problem.
const ExperimentManifest& validate_manifest(const ExperimentManifest& manifest);

/// SHA-256 of the canonical manifest without its output directory.
std::string manifest_hash(const ExperimentManifest& manifest);

/// Plans for one target dataset under the manifest's protocol.
std::vector<augment::AugmentationPlan> plans_for(const ExperimentManifest& manifest, const std::string& target);

}  // namespace augforge::experiment
