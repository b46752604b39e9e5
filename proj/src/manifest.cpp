// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "augforge/error.hpp"
#include "augforge/hashing.hpp"

namespace augforge::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Protocol protocol) {
    switch (protocol) {
        case Protocol::within: return "within";
        case Protocol::one_vs_one: return "one_vs_one";
        case Protocol::four_vs_one: return "four_vs_one";
    }
    return "within";
}

Protocol parse_protocol(std::string_view text) {
    for (auto p : {Protocol::within, Protocol::one_vs_one, Protocol::four_vs_one})
        if (to_string(p) == text) return p;
    throw InputError("unknown protocol '" + std::string(text) + "'");
}

std::string_view to_string(Weighting weighting) {
    return weighting == Weighting::total_size ? "total_size" : "train_size";
}

Weighting parse_weighting(std::string_view text) {
    if (text == "total_size") return Weighting::total_size;
    if (text == "train_size") return Weighting::train_size;
    throw InputError("unknown weighting '" + std::string(text) + "'");
}

std::string_view to_string(FilterWiring wiring) {
    return wiring == FilterWiring::independent ? "independent" : "shared";
}

FilterWiring parse_filter_wiring(std::string_view text) {
    if (text == "independent") return FilterWiring::independent;
    if (text == "shared") return FilterWiring::shared;
    throw InputError("unknown filter wiring '" + std::string(text) + "'");
}

std::vector<std::size_t> ExperimentManifest::levels() const {
    std::set<std::size_t> out;
    for (const auto& c : conditions) out.insert(c.level);
    return {out.begin(), out.end()};
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

classifier::ClassifierSpec classifier_from_json(const json& j, std::string* backend_id) {
    classifier::ClassifierSpec s;
    s.backend = classifier::parse_backend(j.value("backend", std::string(to_string(s.backend))));
    s.feature_dim = j.value("feature_dim", s.feature_dim);
    s.epochs = j.value("epochs", s.epochs);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.seed = j.value("seed", s.seed);
    s.class_weights = j.value("class_weights", s.class_weights);
    if (backend_id) *backend_id = j.value("backend_id", std::string{});
    return s;
}

json classifier_to_json(const classifier::ClassifierSpec& s, const std::string& backend_id) {
    json j = {{"backend", std::string(to_string(s.backend))},
              {"feature_dim", s.feature_dim},
              {"epochs", s.epochs},
              {"learning_rate", s.learning_rate},
              {"seed", s.seed},
              {"class_weights", s.class_weights}};
    if (!backend_id.empty()) j["backend_id"] = backend_id;
    return j;
}

std::vector<ConditionSpec> conditions_from_levels(Protocol protocol, const std::vector<std::size_t>& levels) {
    using augment::Condition;
    std::vector<ConditionSpec> out;
    for (auto level : levels) {
        if (protocol == Protocol::four_vs_one)
            out.push_back({level == 0 ? Condition::cross_4v1 : Condition::cross_4v1_gen, level});
        else
            out.push_back({level == 0 ? Condition::base : Condition::gen, level});
    }
    return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ExperimentManifest manifest_from_json(const json& j, const fs::path& base_dir) {
    try {
        ExperimentManifest m;
        m.schema_version = j.at("schema_version").get<int>();
        m.name = j.value("name", std::string{});
        m.datasets = get_or(j, "datasets", std::vector<std::string>{});
        if (j.contains("catalog")) {
            const auto& c = j.at("catalog");
            m.catalog = c.is_string() ? corpus::DatasetCatalog::load(resolve(base_dir, c.get<std::string>()))
                                      : corpus::DatasetCatalog::from_json(c);
        }
        if (j.contains("inputs"))
            for (const auto& [id, in] : j.at("inputs").items()) {
                DatasetInput input;
                if (in.is_string()) {
                    input.path = resolve(base_dir, in.get<std::string>());
                } else {
                    if (in.contains("path")) input.path = resolve(base_dir, in.at("path").get<std::string>());
                    if (in.contains("train")) input.train = resolve(base_dir, in.at("train").get<std::string>());
                    if (in.contains("test")) input.test = resolve(base_dir, in.at("test").get<std::string>());
                }
                m.inputs[id] = input;
            }
        m.protocol = parse_protocol(j.value("protocol", std::string("within")));
        if (j.contains("conditions")) {
            for (const auto& c : j.at("conditions"))
                m.conditions.push_back({augment::parse_condition(c.at("condition").get<std::string>()),
                                        c.value("level", std::size_t{0})});
        }
        if (j.contains("levels")) {
            auto extra = conditions_from_levels(m.protocol, j.at("levels").get<std::vector<std::size_t>>());
            m.conditions.insert(m.conditions.end(), extra.begin(), extra.end());
        }
        if (!j.contains("conditions") && !j.contains("levels")) m.conditions = conditions_from_levels(m.protocol, {0});
        if (j.contains("pairs"))
            for (const auto& p : j.at("pairs")) m.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        m.split_ratio = j.value("split_ratio", m.split_ratio);
        m.max_tokens = j.value("max_tokens", m.max_tokens);
        if (j.contains("generator")) {
            const auto& g = j.at("generator");
            auto& s = m.generator;
            s.backend = generator::parse_backend(g.value("backend", std::string(to_string(s.backend))));
            s.order = g.value("order", s.order);
            s.temperature = g.value("temperature", s.temperature);
            s.max_tokens = g.value("max_tokens", s.max_tokens);
            s.add_k = g.value("add_k", s.add_k);
            if (g.contains("top_k")) s.decoding.top_k = g.at("top_k").get<int>();
            if (g.contains("top_p")) s.decoding.top_p = g.at("top_p").get<double>();
            if (s.backend == generator::Backend::external) s.decoding.temperature = s.temperature;
            m.generator_backend = g.value("backend_id", std::string{});
        }
        if (j.contains("filter_classifier"))
            m.filter_classifier = classifier_from_json(j.at("filter_classifier"), &m.filter_backend);
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            m.filter.threshold = f.value("threshold", m.filter.threshold);
            m.filter.apply_to_nonhate = f.value("apply_to_nonhate", m.filter.apply_to_nonhate);
            m.filter_wiring = parse_filter_wiring(f.value("wiring", std::string(to_string(m.filter_wiring))));
        }
        if (j.contains("models")) {
            for (const auto& mj : j.at("models")) {
                ModelSpec ms;
                ms.id = mj.at("id").get<std::string>();
                ms.spec = classifier_from_json(mj, &ms.backend);
                m.models.push_back(std::move(ms));
            }
        } else {
            m.models.push_back({"linear", {}, {}});
        }
        m.dedupe = j.value("dedupe", m.dedupe);
        m.selection = augment::parse_selection_rule(j.value("selection", std::string(to_string(m.selection))));
        m.weighting = parse_weighting(j.value("weighting", std::string(to_string(m.weighting))));
        m.oversample = j.value("oversample", m.oversample);
        m.max_supply_rounds = j.value("max_supply_rounds", m.max_supply_rounds);
        m.seeds = get_or(j, "seeds", std::vector<std::uint64_t>{});
        if (j.contains("output_dir")) m.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        if (j.contains("backends"))
            for (const auto& [id, b] : j.at("backends").items()) {
                BackendSpec spec;
                spec.command = b.at("command").get<std::vector<std::string>>();
                if (b.contains("handshake_timeout_ms"))
                    spec.timeouts.handshake = std::chrono::milliseconds(b.at("handshake_timeout_ms").get<long>());
                if (b.contains("fit_silence_timeout_ms"))
                    spec.timeouts.fit_silence = std::chrono::milliseconds(b.at("fit_silence_timeout_ms").get<long>());
                if (b.contains("request_timeout_ms"))
                    spec.timeouts.request = std::chrono::milliseconds(b.at("request_timeout_ms").get<long>());
                m.backends[id] = std::move(spec);
            }
        m.decision_threshold = j.value("decision_threshold", m.decision_threshold);
        if (j.contains("analysis")) {
            const auto& a = j.at("analysis");
            m.analysis.enabled = a.value("enabled", m.analysis.enabled);
            m.analysis.top_n = a.value("top_n", m.analysis.top_n);
            m.analysis.min_count = a.value("min_count", m.analysis.min_count);
            m.analysis.smoothing_k = a.value("smoothing_k", m.analysis.smoothing_k);
        }
        m.folds = j.value("folds", m.folds);
        m.threads = j.value("threads", m.threads);
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
}

json manifest_to_json(const ExperimentManifest& m) {
    json inputs = json::object();
    for (const auto& [id, in] : m.inputs) {
        json entry = json::object();
        if (!in.path.empty()) entry["path"] = in.path.string();
        if (!in.train.empty()) entry["train"] = in.train.string();
        if (!in.test.empty()) entry["test"] = in.test.string();
        inputs[id] = entry;
    }
    json conditions = json::array();
    for (const auto& c : m.conditions)
        conditions.push_back({{"condition", std::string(augment::to_string(c.condition))}, {"level", c.level}});
    json pairs = json::array();
    for (const auto& [a, b] : m.pairs) pairs.push_back({a, b});
    json generator = {{"backend", std::string(to_string(m.generator.backend))},
                      {"order", m.generator.order},
                      {"temperature", m.generator.temperature},
                      {"max_tokens", m.generator.max_tokens},
                      {"add_k", m.generator.add_k}};
    if (m.generator.decoding.top_k) generator["top_k"] = *m.generator.decoding.top_k;
    if (m.generator.decoding.top_p) generator["top_p"] = *m.generator.decoding.top_p;
    if (!m.generator_backend.empty()) generator["backend_id"] = m.generator_backend;
    json models = json::array();
    for (const auto& ms : m.models) {
        json mj = classifier_to_json(ms.spec, ms.backend);
        mj["id"] = ms.id;
        models.push_back(mj);
    }
    json backends = json::object();
    for (const auto& [id, b] : m.backends)
        backends[id] = {{"command", b.command},
                        {"handshake_timeout_ms", b.timeouts.handshake.count()},
                        {"fit_silence_timeout_ms", b.timeouts.fit_silence.count()},
                        {"request_timeout_ms", b.timeouts.request.count()}};
    return {{"schema_version", m.schema_version},
            {"name", m.name},
            {"datasets", m.datasets},
            {"catalog", m.catalog.to_json()},
            {"inputs", inputs},
            {"protocol", std::string(to_string(m.protocol))},
            {"conditions", conditions},
            {"pairs", pairs},
            {"split_ratio", m.split_ratio},
            {"max_tokens", m.max_tokens},
            {"generator", generator},
            {"filter_classifier", classifier_to_json(m.filter_classifier, m.filter_backend)},
            {"filter",
             {{"threshold", m.filter.threshold},
              {"apply_to_nonhate", m.filter.apply_to_nonhate},
              {"wiring", std::string(to_string(m.filter_wiring))}}},
            {"models", models},
            {"dedupe", m.dedupe},
            {"selection", std::string(to_string(m.selection))},
            {"weighting", std::string(to_string(m.weighting))},
            {"oversample", m.oversample},
            {"max_supply_rounds", m.max_supply_rounds},
            {"seeds", m.seeds},
            {"output_dir", m.output_dir.string()},
            {"backends", backends},
            {"decision_threshold", m.decision_threshold},
            {"analysis",
             {{"enabled", m.analysis.enabled},
              {"top_n", m.analysis.top_n},
              {"min_count", m.analysis.min_count},
              {"smoothing_k", m.analysis.smoothing_k}}},
            {"folds", m.folds},
            {"threads", m.threads}};
}

ExperimentManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j, path.parent_path());
}

std::vector<std::string> manifest_problems(const ExperimentManifest& m) {
    using augment::Condition;
    std::vector<std::string> problems;
    auto check = [&](auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            problems.emplace_back(e.what());
        }
    };

    if (m.schema_version != kManifestSchemaVersion)
        problems.push_back("unsupported schema_version " + std::to_string(m.schema_version));
    if (m.datasets.empty()) problems.emplace_back("no datasets listed");
    std::set<std::string> seen;
    for (const auto& id : m.datasets) {
        if (!seen.insert(id).second) problems.push_back("dataset '" + id + "' listed twice");
        if (!m.catalog.contains(id)) problems.push_back("unknown dataset id '" + id + "'");
        auto in = m.inputs.find(id);
        if (in == m.inputs.end()) {
            problems.push_back("no input file for dataset '" + id + "'");
        } else if (in->second.presplit() ? in->second.test.empty() : in->second.path.empty()) {
            problems.push_back("dataset '" + id + "' needs either a path or both train and test");
        }
    }
    if (m.seeds.empty()) problems.emplace_back("no seeds listed");
    if (m.protocol != Protocol::within && m.datasets.size() < 2)
        problems.push_back(std::string(to_string(m.protocol)) + " protocol needs at least 2 datasets");
    if (m.conditions.empty()) problems.emplace_back("no conditions listed");

    std::set<std::pair<Condition, std::size_t>> conditions;
    for (const auto& c : m.conditions) {
        const auto name = std::string(augment::to_string(c.condition));
        if (!conditions.insert({c.condition, c.level}).second)
            problems.push_back("condition " + name + " level " + std::to_string(c.level) + " listed twice");
        const bool allowed = m.protocol == Protocol::within     ? !augment::is_cross(c.condition)
                             : m.protocol == Protocol::one_vs_one ? (c.condition == Condition::base ||
                                                                     c.condition == Condition::gen)
                                                                  : augment::is_cross(c.condition);
        if (!allowed) problems.push_back("condition " + name + " is not valid for protocol " +
                                         std::string(to_string(m.protocol)));
        if (augment::involves_generation(c.condition) && c.level == 0)
            problems.push_back("condition " + name + " needs a positive level");
        if (!augment::involves_generation(c.condition) && c.level != 0)
            problems.push_back("condition " + name + " takes no level");
    }
    for (const auto& [train, test] : m.pairs) {
        if (m.protocol != Protocol::one_vs_one) {
            problems.emplace_back("pairs are only meaningful for the one_vs_one protocol");
            break;
        }
        if (train == test) problems.push_back("one-vs-one pair trains and tests on the same dataset '" + train + "'");
        for (const auto& id : {train, test})
            if (std::find(m.datasets.begin(), m.datasets.end(), id) == m.datasets.end())
                problems.push_back("pair references dataset '" + id + "' not listed in datasets");
    }
    if (!(m.split_ratio > 0.0 && m.split_ratio < 1.0)) problems.emplace_back("split_ratio must lie in (0, 1)");
    if (m.max_tokens < 1) problems.emplace_back("max_tokens must be positive");
    check([&] { m.generator.validate(); });
    check([&] { m.filter_classifier.validate(); });
    check([&] { m.filter.validate(); });
    if (m.models.empty()) problems.emplace_back("no models listed");
    std::set<std::string> model_ids;
    for (const auto& ms : m.models) {
        if (!model_ids.insert(ms.id).second) problems.push_back("model id '" + ms.id + "' listed twice");
        check([&] { ms.spec.validate(); });
    }

    auto check_backend = [&](bool external, const std::string& id, const std::string& what) {
        if (!external) return;
        if (id.empty())
            problems.push_back(what + " uses an external backend but names no backend_id");
        else if (!m.backends.count(id))
            problems.push_back(what + " references unknown backend '" + id + "'");
    };
    check_backend(m.generator.backend == generator::Backend::external, m.generator_backend, "generator");
    check_backend(m.filter_classifier.backend == classifier::Backend::external, m.filter_backend, "filter_classifier");
    for (const auto& ms : m.models)
        check_backend(ms.spec.backend == classifier::Backend::external, ms.backend, "model '" + ms.id + "'");
    for (const auto& [id, b] : m.backends)
        if (b.command.empty()) problems.push_back("backend '" + id + "' has an empty command");

    if (!(m.oversample >= 1.0)) problems.emplace_back("oversample must be at least 1");
    if (m.max_supply_rounds < 1) problems.emplace_back("max_supply_rounds must be at least 1");
    if (!(m.decision_threshold >= 0.0 && m.decision_threshold <= 1.0))
        problems.emplace_back("decision_threshold must lie in [0, 1]");
    if (m.folds < 2) problems.emplace_back("folds must be at least 2");
    if (m.threads < 1) problems.emplace_back("threads must be at least 1");
    if (m.analysis.top_n < 1 || m.analysis.min_count < 1 || !(m.analysis.smoothing_k >= 0.0))
        problems.emplace_back("analysis options out of range");
    return problems;
}

const ExperimentManifest& validate_manifest(const ExperimentManifest& manifest) {
    auto problems = manifest_problems(manifest);
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return manifest;
}

std::string manifest_hash(const ExperimentManifest& manifest) {
    json j = manifest_to_json(manifest);
    j.erase("output_dir");
    j.erase("threads");
    return sha256_hex(j.dump());
}

std::vector<augment::AugmentationPlan> plans_for(const ExperimentManifest& m, const std::string& target) {
    std::vector<std::string> others;
    for (const auto& d : m.datasets)
        if (d != target) others.push_back(d);
    std::vector<augment::AugmentationPlan> plans;
    for (const auto& c : m.conditions) {
        if (m.protocol == Protocol::one_vs_one) {
            for (const auto& source : others) {
                if (!m.pairs.empty() &&
                    std::find(m.pairs.begin(), m.pairs.end(), std::pair{source, target}) == m.pairs.end())
                    continue;
                plans.push_back({c.condition, c.level, target, {source}});
            }
            continue;
        }
        augment::AugmentationPlan plan{c.condition, c.level, target, {}};
        if (c.condition == augment::Condition::gold_pool || augment::is_cross(c.condition)) plan.source_datasets = others;
        plans.push_back(std::move(plan));
    }
    auto rank = [](const augment::AugmentationPlan& p) {
        switch (p.condition) {
            case augment::Condition::base:
            case augment::Condition::cross_4v1: return 0;
            case augment::Condition::gold_pool: return 1;
            default: return 2;
        }
    };
    std::stable_sort(plans.begin(), plans.end(), [&](const auto& a, const auto& b) {
        return std::pair{rank(a), a.level} < std::pair{rank(b), b.level};
    });
    return plans;
}

}  // namespace augforge::experiment
