// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <set>
#include <mutex>
#include <sstream>
#include <type_traits>

#include "augforge/analysis.hpp"
#include "augforge/error.hpp"
#include "augforge/hashing.hpp"
#include "augforge/rng.hpp"

namespace augforge::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitTag = fnv1a64("split");
constexpr std::uint64_t kAdaptTag = fnv1a64("adapt");
constexpr std::uint64_t kSupplyTag = fnv1a64("generate");
constexpr std::uint64_t kRankTag = fnv1a64("rank");
constexpr std::uint64_t kTrainTag = fnv1a64("train");
constexpr std::uint64_t kFoldTag = fnv1a64("folds");
constexpr std::uint64_t kFoldRunTag = fnv1a64("fold-run");

std::uint64_t label_code(Label label) { return label == Label::hate ? 1 : 0; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string examples_jsonl(const Examples& examples) {
    std::string out;
    for (const auto& e : examples) {
        out += corpus::to_json_line(e);
        out += '\n';
    }
    return out;
}

Examples parse_examples(const std::string& text) {
    Examples out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(corpus::from_json_line(line));
    return out;
}

Examples of_class(const Examples& examples, Label label) {
    Examples out;
    for (const auto& e : examples)
        if (e.label == label) out.push_back(e);
    return out;
}

std::vector<Tokens> token_lists(const Examples& examples) {
    std::vector<Tokens> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.tokens);
    return out;
}

std::vector<Label> labels_of(const Examples& examples) {
    std::vector<Label> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.label);
    return out;
}

std::string key_of(std::initializer_list<std::string_view> parts) {
    std::string joined;
    for (auto p : parts) {
        joined += p;
        joined += '\x1e';
    }
    return sha256_hex(joined);
}

json spec_json(const classifier::ClassifierSpec& s) {
    return {{"backend", std::string(to_string(s.backend))},
            {"feature_dim", s.feature_dim},
            {"epochs", s.epochs},
            {"learning_rate", s.learning_rate},
            {"class_weights", s.class_weights}};
}

json spec_json(const generator::GeneratorSpec& s) {
    return {{"dataset_id", s.dataset_id},
            {"class_label", std::string(to_string(s.class_label))},
            {"backend", std::string(to_string(s.backend))},
            {"order", s.order},
            {"temperature", s.temperature},
            {"seed", s.seed},
            {"max_tokens", s.max_tokens},
            {"add_k", s.add_k}};
}

json report_json(const filter::FilterReport& r) {
    json j = {{"generated", r.generated}, {"candidates", r.candidates}, {"kept", r.kept}, {"threshold", r.threshold}};
    j["keep_rate"] = r.keep_rate ? json(*r.keep_rate) : json(nullptr);
    return j;
}

filter::FilterReport report_from_json(const json& j) {
    filter::FilterReport r;
    r.generated = j.at("generated").get<std::size_t>();
    r.candidates = j.at("candidates").get<std::size_t>();
    r.kept = j.at("kept").get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    if (!j.at("keep_rate").is_null()) r.keep_rate = j.at("keep_rate").get<double>();
    return r;
}

json filter_record_json(const FilterRecord& f) {
    return {{"run", f.run},
            {"dataset", f.dataset},
            {"label", std::string(to_string(f.label))},
            {"requested", f.requested},
            {"quota", f.quota},
            {"rounds", f.rounds},
            {"report", report_json(f.report)}};
}

FilterRecord filter_record_from_json(const json& j) {
    return {j.at("run").get<std::string>(),
            j.at("dataset").get<std::string>(),
            parse_label(j.at("label").get<std::string>()),
            j.at("requested").get<std::size_t>(),
            j.at("quota").get<std::size_t>(),
            j.at("rounds").get<int>(),
            report_from_json(j.at("report"))};
}

/// Persisted artifacts with content keys. A cached artifact is reused only
/// when its recorded key matches the key of its current inputs.
class ArtifactStore {
public:
    ArtifactStore(fs::path root, const RunOptions& options) : root_(std::move(root)), options_(options) {}

    bool persist() const { return options_.persist; }

    std::optional<std::string> cached(const std::string& rel, const std::string& key) const {
        if (!options_.persist || !options_.resume) return std::nullopt;
        const fs::path p = root_ / rel;
        const fs::path k = root_ / (rel + ".key");
        if (!fs::exists(p) || !fs::exists(k)) return std::nullopt;
        if (read_file(k) != key) return std::nullopt;
        return read_file(p);
    }

    void put(const std::string& rel, const std::string& content, const std::string& key = {}) const {
        if (!options_.persist) return;
        const fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        write_atomic(p, content);
        if (!key.empty()) write_atomic(root_ / (rel + ".key"), key);
    }

private:
    static void write_atomic(const fs::path& path, const std::string& content) {
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw InputError("cannot write " + tmp.string());
            out << content;
        }
        fs::rename(tmp, path);
    }

    fs::path root_;
    RunOptions options_;
};

class StageTimer {
public:
    void add(const std::string& stage, double seconds) { seconds_[stage] += seconds; }

    template <typename F>
    auto time(const std::string& stage, F&& fn) {
        const auto start = std::chrono::steady_clock::now();
        struct Guard {
            StageTimer* timer;
            const std::string& stage;
            std::chrono::steady_clock::time_point start;
            ~Guard() {
                timer->add(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
        } guard{this, stage, start};
        return fn();
    }

    std::vector<std::pair<std::string, double>> ordered() const {
        std::vector<std::pair<std::string, double>> out;
        for (const char* s : kStages) {
            auto it = seconds_.find(s);
            out.emplace_back(s, it == seconds_.end() ? 0.0 : it->second);
        }
        return out;
    }

private:
    std::map<std::string, double> seconds_;
};

struct DatasetData {
    Examples all;
    Examples train;  // presplit inputs only
    Examples test;
    bool presplit = false;
    std::string key;
};

struct Split {
    Examples train;
    Examples test;
    std::string key;
};

struct Supply {
    Examples kept;
    std::string key;
};

struct CellResult {
    eval::CellKey key;
    std::optional<eval::PRF> prf;
    std::optional<eval::ConfusionCounts> counts;
    std::string error;
};

class Pipeline {
public:
    Pipeline(ExperimentManifest manifest, const RunOptions& options, RunRecord& record)
        : m_(std::move(manifest)),
          record_(record),
          store_(m_.output_dir / manifest_hash(m_), options) {}

    void ingest() {
        timer_.time("ingest", [&] {
            for (const auto& id : m_.datasets) {
                try {
                    const auto& entry = m_.catalog.at(id);
                    const auto& input = m_.inputs.at(id);
                    DatasetData d;
                    std::string entry_key = id;
                    for (const auto& [raw, target] : entry.label_mapping)
                        entry_key += "\x1f" + raw + "=" + std::string(corpus::to_string(target));
                    auto load = [&](const fs::path& p) {
                        auto result = corpus::ingest_dataset(p, entry, m_.max_tokens);
                        spdlog::info("ingested {} from {}: {} kept of {} records, hate ratio {:.3f}", id, p.string(),
                                     result.stats.kept, result.stats.records, result.stats.hate_ratio);
                        return result.examples;
                    };
                    if (input.presplit()) {
                        d.presplit = true;
                        d.train = load(input.train);
                        d.test = load(input.test);
                        d.all = d.train;
                        d.all.insert(d.all.end(), d.test.begin(), d.test.end());
                        store_.put("ingest/" + id + ".train.jsonl", examples_jsonl(d.train));
                        store_.put("ingest/" + id + ".test.jsonl", examples_jsonl(d.test));
                    } else {
                        d.all = load(input.path);
                        store_.put("ingest/" + id + ".jsonl", examples_jsonl(d.all));
                    }
                    d.key = key_of({"ingest", examples_jsonl(d.train), examples_jsonl(d.test), examples_jsonl(d.all),
                                    entry_key});
                    data_[id] = std::move(d);
                } catch (const Error& e) {
                    fail("ingest", id, e.what());
                }
            }
        });
    }

    const std::map<std::string, DatasetData>& data() const { return data_; }

    std::map<std::string, Split> split(std::uint64_t seed, const std::string& run) {
        return timer_.time("split", [&] {
            std::map<std::string, Split> out;
            for (const auto& [id, d] : data_) {
                try {
                    Split s;
                    if (d.presplit) {
                        s.train = d.train;
                        s.test = d.test;
                    } else {
                        auto cs = corpus::stratified_split(d.all, m_.split_ratio,
                                                           derive_seed(seed, kSplitTag, {fnv1a64(id)}));
                        s.train = std::move(cs.train);
                        s.test = std::move(cs.test);
                    }
                    finish_split(run, id, s);
                    out[id] = std::move(s);
                } catch (const Error& e) {
                    fail("split", run + "/" + id, e.what());
                }
            }
            return out;
        });
    }

    void finish_split(const std::string& run, const std::string& id, Split& s) {
        const auto train_text = examples_jsonl(s.train);
        const auto test_text = examples_jsonl(s.test);
        s.key = key_of({"split", train_text, test_text});
        store_.put("split/" + run + "/" + id + ".train.jsonl", train_text);
        store_.put("split/" + run + "/" + id + ".test.jsonl", test_text);
    }

    eval::ResultsGrid evaluate_run(const std::string& run, std::uint64_t seed, const std::map<std::string, Split>& splits) {
        splits_ = &splits;
        supplies_.clear();
        supply_errors_.clear();
        filter_classifiers_.clear();

        auto quotas = plan_quotas();
        adapt_and_supply(run, seed, quotas);
        auto grid = evaluate_cells(run, seed);
        grid.metadata.seed = seed;
        grid.metadata.seeds = m_.seeds;
        grid.metadata.levels = m_.levels();
        for (const auto& [id, d] : data_)
            grid.metadata.dataset_sizes[id] = m_.weighting == Weighting::total_size
                                                  ? static_cast<double>(d.all.size())
                                                  : static_cast<double>(splits.count(id) ? splits.at(id).train.size() : 0);
        if (m_.analysis.enabled && store_.persist()) analyze(run);
        return grid;
    }

    std::vector<std::pair<std::string, double>> timings() const { return timer_.ordered(); }

private:
    using SupplyKey = std::pair<std::string, Label>;

    void fail(const std::string& stage, const std::string& subject, const std::string& message) {
        spdlog::error("{} stage failed for {}: {}", stage, subject, message);
        record_.failures.push_back({stage, subject, message});
    }

    const Split& split_of(const std::string& id) const {
        auto it = splits_->find(id);
        if (it == splits_->end()) throw InputError("dataset " + id + " is unavailable (see earlier stage failures)");
        return it->second;
    }

    std::map<SupplyKey, std::size_t> plan_quotas() const {
        std::map<SupplyKey, std::size_t> quotas;
        auto need = [&](const std::string& id, Label label, std::size_t n) {
            auto& q = quotas[{id, label}];
            q = std::max(q, n);
        };
        for (const auto& target : m_.datasets) {
            for (const auto& plan : plans_for(m_, target)) {
                if (plan.condition == augment::Condition::gen) {
                    const auto& source = m_.protocol == Protocol::one_vs_one ? plan.source_datasets.front() : target;
                    const auto [h, n] = augment::within_quota(plan.level);
                    need(source, Label::hate, h);
                    need(source, Label::non_hate, n);
                } else if (plan.condition == augment::Condition::cross_4v1_gen) {
                    for (const auto& [k, q] : augment::cross_quotas(plan.source_datasets, plan.level))
                        need(k.first, k.second, q);
                }
            }
        }
        return quotas;
    }

    std::shared_ptr<backend::Client> connect(const std::string& backend_id, const std::string& purpose) {
        const auto& spec = m_.backends.at(backend_id);
        auto client = std::make_shared<backend::Client>(
            backend::ClientOptions{backend_id + " (" + purpose + ")", spec.command, spec.timeouts});
        client->handshake();
        return client;
    }

    std::string filter_classifier_key(const std::string& run, const std::string& id, std::uint64_t seed,
                                      classifier::ConfidenceClassifier* out) {
        const auto& s = split_of(id);
        auto spec = m_.filter_classifier;
        auto backend_id = m_.filter_backend;
        if (m_.filter_wiring == FilterWiring::shared) {
            const auto& model = m_.models.front();
            spec = model.spec;
            backend_id = model.backend;
            spec.seed = derive_seed(seed, kTrainTag, {fnv1a64(id + "/base"), fnv1a64(model.id)});
        } else {
            spec.seed = derive_seed(seed, kTrainTag, {fnv1a64(id), fnv1a64("filter")});
        }
        const std::string rel = "filter/" + run + "/" + id + ".classifier.json";
        const std::string key = key_of({"filter-classifier", s.key, spec_json(spec).dump()});
        if (spec.backend == classifier::Backend::external) {
            *out = classifier::fit_classifier(s.train, spec, connect(backend_id, id + " filter"));
            return key;
        }
        if (auto text = store_.cached(rel, key)) {
            *out = classifier::deserialize_classifier(*text);
        } else {
            *out = classifier::fit_classifier(s.train, spec);
            store_.put(rel, classifier::serialize_classifier(*out), key);
        }
        return key;
    }

    void adapt_and_supply(const std::string& run, std::uint64_t seed, const std::map<SupplyKey, std::size_t>& quotas) {
        for (const auto& [sk, quota] : quotas) {
            if (quota == 0) continue;
            const auto& [id, label] = sk;
            const std::string subject = run + "/" + id + "/" + std::string(to_string(label));
            std::string stage = "adapt";
            try {
                const auto& s = split_of(id);
                auto spec = m_.generator;
                spec.dataset_id = id;
                spec.class_label = label;
                spec.seed = derive_seed(seed, kAdaptTag, {fnv1a64(id), label_code(label)});
                const auto examples = of_class(s.train, label);
                const std::string gen_rel =
                    "adapt/" + run + "/" + id + "." + std::string(to_string(label)) + ".generator.json";
                const std::string gen_key = key_of({"adapt", s.key, spec_json(spec).dump()});

                generator::GeneratorHandle handle = timer_.time("adapt", [&] {
                    if (spec.backend == generator::Backend::external)
                        return generator::adapt_generator(examples, spec,
                                                          connect(m_.generator_backend, id + " generator"));
                    if (auto text = store_.cached(gen_rel, gen_key)) return generator::deserialize_generator(*text);
                    auto h = generator::adapt_generator(examples, spec);
                    store_.put(gen_rel, generator::serialize_generator(h), gen_key);
                    return h;
                });

                stage = "filter";
                const bool scored = label == Label::hate || m_.filter.apply_to_nonhate;
                classifier::ConfidenceClassifier* clf = nullptr;
                std::string clf_key = "unscored";
                if (scored) {
                    auto it = filter_classifiers_.find(id);
                    if (it == filter_classifiers_.end()) {
                        classifier::ConfidenceClassifier c;
                        std::string k = timer_.time("filter", [&] { return filter_classifier_key(run, id, seed, &c); });
                        it = filter_classifiers_.emplace(id, std::make_pair(std::move(c), k)).first;
                    }
                    clf = &it->second.first;
                    clf_key = it->second.second;
                }

                stage = "generate";
                const std::string supply_rel = "filter/" + run + "/" + id + "." + std::string(to_string(label)) + ".jsonl";
                json params = {{"quota", quota},
                               {"oversample", m_.oversample},
                               {"rounds", m_.max_supply_rounds},
                               {"dedupe", m_.dedupe},
                               {"threshold", m_.filter.threshold},
                               {"apply_to_nonhate", m_.filter.apply_to_nonhate},
                               {"selection", std::string(to_string(m_.selection))},
                               {"seed", seed}};
                const bool cacheable = spec.backend != generator::Backend::external &&
                                       (!clf || clf->spec.backend != classifier::Backend::external);
                const std::string supply_key = key_of({"supply", gen_key, clf_key, params.dump()});

                if (cacheable) {
                    auto kept_text = store_.cached(supply_rel, supply_key);
                    auto report_text = store_.cached(supply_rel + ".report.json", supply_key);
                    if (kept_text && report_text) {
                        supplies_[sk] = {parse_examples(*kept_text), supply_key};
                        record_.filter_reports.push_back(filter_record_from_json(json::parse(*report_text)));
                        continue;
                    }
                }

                FilterRecord rec;
                rec.run = run;
                rec.dataset = id;
                rec.label = label;
                rec.quota = quota;
                rec.report.threshold = m_.filter.threshold;
                Examples kept;
                Examples seen = s.train;
                std::vector<generator::SyntheticSequence> all_candidates;
                for (int round = 0; round < m_.max_supply_rounds && kept.size() < quota; ++round) {
                    const std::size_t missing = quota - kept.size();
                    double rate = rec.report.generated > 0
                                      ? static_cast<double>(rec.report.kept) / static_cast<double>(rec.report.generated)
                                      : 1.0;
                    rate = std::max(rate, 0.02);
                    const auto request = static_cast<std::size_t>(
                        std::ceil(static_cast<double>(missing) * m_.oversample / rate));
                    const auto round_seed = derive_seed(seed, kSupplyTag, {fnv1a64(id), label_code(label),
                                                                           static_cast<std::uint64_t>(round)});
                    auto candidates = timer_.time("generate", [&] { return generator::sample(handle, request, round_seed); });
                    rec.requested += request;
                    rec.rounds = round + 1;
                    const std::size_t generated = candidates.size();
                    if (m_.dedupe) candidates = generator::dedupe(candidates, seen);
                    for (const auto& c : candidates) seen.push_back(generator::to_example(c));
                    all_candidates.insert(all_candidates.end(), candidates.begin(), candidates.end());

                    filter::FilterResult result = timer_.time("filter", [&] {
                        if (!scored) {
                            filter::FilterResult r;
                            r.kept = filter::pass_through_nonhate(candidates);
                            r.report.candidates = candidates.size();
                            r.report.kept = r.kept.size();
                            return r;
                        }
                        return filter::filter_candidates(candidates, *clf, m_.filter);
                    });
                    rec.report.generated += generated;
                    rec.report.candidates += candidates.size();
                    rec.report.kept += result.kept.size();
                    kept.insert(kept.end(), result.kept.begin(), result.kept.end());
                }
                if (rec.report.candidates > 0)
                    rec.report.keep_rate =
                        static_cast<double>(rec.report.kept) / static_cast<double>(rec.report.candidates);
                if (kept.size() < quota)
                    spdlog::warn("supply for {} short: {} of {} after {} rounds", subject, kept.size(), quota,
                                 rec.rounds);
                kept = augment::rank_synthetic(std::move(kept), m_.selection,
                                               derive_seed(seed, kRankTag, {fnv1a64(id), label_code(label)}));

                store_.put("generate/" + run + "/" + id + "." + std::string(to_string(label)) + ".jsonl", [&] {
                    std::string text;
                    for (const auto& c : all_candidates) text += corpus::to_json_line(generator::to_example(c)) + "\n";
                    return text;
                }());
                store_.put(supply_rel, examples_jsonl(kept), cacheable ? supply_key : std::string{});
                store_.put(supply_rel + ".report.json", filter_record_json(rec).dump(2) + "\n",
                           cacheable ? supply_key : std::string{});
                record_.filter_reports.push_back(rec);
                supplies_[sk] = {std::move(kept), supply_key};
            } catch (const Error& e) {
                fail(stage, subject, e.what());
                supply_errors_[sk] = stage + " stage failed for " + subject + ": " + e.what();
            }
        }
    }

    const Examples& supply_of(const std::string& id, Label label) const {
        auto it = supplies_.find({id, label});
        if (it != supplies_.end()) return it->second.kept;
        auto err = supply_errors_.find({id, label});
        if (err != supply_errors_.end()) throw Error(err->second);
        throw InputError("no synthetic supply for " + id + "/" + std::string(to_string(label)));
    }

    Examples training_set(const augment::AugmentationPlan& plan) const {
        using augment::Condition;
        switch (plan.condition) {
            case Condition::base: {
                const auto& source = m_.protocol == Protocol::one_vs_one ? plan.source_datasets.front() : plan.target_dataset;
                return split_of(source).train;
            }
            case Condition::gen: {
                const auto& source = m_.protocol == Protocol::one_vs_one ? plan.source_datasets.front() : plan.target_dataset;
                return augment::assemble_within(split_of(source).train, supply_of(source, Label::hate),
                                                supply_of(source, Label::non_hate), plan.level);
            }
            case Condition::gold_pool: {
                std::vector<std::pair<std::string, Examples>> others;
                for (const auto& id : plan.source_datasets) others.emplace_back(id, split_of(id).train);
                return augment::assemble_gold_pool(plan.target_dataset, split_of(plan.target_dataset).train, others);
            }
            case Condition::cross_4v1:
            case Condition::cross_4v1_gen: {
                std::vector<augment::CrossSource> sources;
                for (const auto& id : plan.source_datasets) {
                    augment::CrossSource src{id, split_of(id).train, {}, {}};
                    if (plan.level > 0) {
                        src.synth_hate = supply_of(id, Label::hate);
                        src.synth_nonhate = supply_of(id, Label::non_hate);
                    }
                    sources.push_back(std::move(src));
                }
                return augment::assemble_cross_pool(sources, plan.level, plan.target_dataset);
            }
        }
        throw PreconditionError("unhandled condition");
    }

    template <typename F>
    auto timer_guard(const std::string& stage, F&& fn) const -> std::invoke_result_t<F> {
        struct Guard {
            const Pipeline* self;
            const std::string& stage;
            std::chrono::steady_clock::time_point start;
            ~Guard() {
                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::lock_guard lock(self->timer_mutex_);
                self->timer_.add(stage, seconds);
            }
        } guard{this, stage, std::chrono::steady_clock::now()};
        return fn();
    }

    std::vector<CellResult> evaluate_plan(const std::string& run, std::uint64_t seed,
                                          const augment::AugmentationPlan& plan) const {
        const std::string train_on = m_.protocol == Protocol::one_vs_one ? plan.source_datasets.front() : "";
        const std::string label = plan.label();
        std::string cell_name = plan.target_dataset + "/" + label;
        if (!train_on.empty()) cell_name += ".from-" + train_on;
        std::string file_name = cell_name;
        std::replace(file_name.begin(), file_name.end(), ':', '-');

        std::vector<CellResult> out;
        for (const auto& model : m_.models) out.push_back({{plan.target_dataset, model.id, label, train_on}, {}, {}, {}});
        Examples train;
        const Split* test = nullptr;
        std::string train_key;
        try {
            train = timer_guard("assemble", [&] { return training_set(plan); });
            test = &split_of(plan.target_dataset);
            const auto text = examples_jsonl(train);
            train_key = key_of({"assemble", text});
            store_.put("augment/" + run + "/" + file_name + ".jsonl", text);
        } catch (const Error& e) {
            spdlog::error("cell {} ({}) failed during assembly: {}", cell_name, run, e.what());
            for (auto& r : out) r.error = std::string("assemble: ") + e.what();
            return out;
        }

        const auto test_tokens = token_lists(test->test);
        const auto test_labels = labels_of(test->test);
        for (std::size_t i = 0; i < m_.models.size(); ++i) {
            const auto& model = m_.models[i];
            auto& result = out[i];
            try {
                auto spec = model.spec;
                spec.seed = derive_seed(seed, kTrainTag, {fnv1a64(cell_name), fnv1a64(model.id)});
                classifier::ConfidenceClassifier clf;
                if (spec.backend == classifier::Backend::external) {
                    const auto& bs = m_.backends.at(model.backend);
                    auto client = std::make_shared<backend::Client>(
                        backend::ClientOptions{model.backend + " (" + model.id + ")", bs.command, bs.timeouts});
                    client->handshake();
                    clf = classifier::fit_classifier(train, spec, client);
                } else {
                    const std::string rel = "train/" + run + "/" + file_name + "." + model.id + ".classifier.json";
                    const std::string key = key_of({"train", train_key, spec_json(spec).dump()});
                    if (auto text = store_.cached(rel, key)) {
                        clf = classifier::deserialize_classifier(*text);
                    } else {
                        clf = timer_guard("train", [&] { return classifier::fit_classifier(train, spec); });
                        store_.put(rel, classifier::serialize_classifier(clf), key);
                    }
                }
                auto counts = timer_guard("evaluate", [&] {
                    const auto predictions = classifier::predict(clf, test_tokens, m_.decision_threshold);
                    return eval::confusion(predictions, test_labels);
                });
                result.counts = counts;
                result.prf = eval::prf(counts);
            } catch (const Error& e) {
                spdlog::error("cell {} model {} ({}) failed: {}", cell_name, model.id, run, e.what());
                result.error = std::string("train/evaluate: ") + e.what();
            }
        }
        return out;
    }

    eval::ResultsGrid evaluate_cells(const std::string& run, std::uint64_t seed) {
        std::vector<augment::AugmentationPlan> plans;
        for (const auto& target : m_.datasets)
            for (auto& plan : plans_for(m_, target)) plans.push_back(std::move(plan));

        bool external = false;
        for (const auto& model : m_.models) external |= model.spec.backend == classifier::Backend::external;
        const std::size_t workers = external ? 1 : std::max(1u, m_.threads);

        std::vector<std::vector<CellResult>> results(plans.size());
        if (workers == 1) {
            for (std::size_t i = 0; i < plans.size(); ++i) results[i] = evaluate_plan(run, seed, plans[i]);
        } else {
            for (std::size_t begin = 0; begin < plans.size(); begin += workers) {
                std::vector<std::future<std::vector<CellResult>>> futures;
                for (std::size_t i = begin; i < std::min(plans.size(), begin + workers); ++i)
                    futures.push_back(std::async(std::launch::async,
                                                 [this, &run, seed, &plans, i] { return evaluate_plan(run, seed, plans[i]); }));
                for (std::size_t i = 0; i < futures.size(); ++i) results[begin + i] = futures[i].get();
            }
        }

        eval::ResultsGrid grid;
        for (const auto& batch : results)
            for (const auto& r : batch) {
                if (r.prf)
                    grid.set(r.key, *r.prf, r.counts);
                else {
                    grid.set_failed(r.key, r.error);
                    record_.failures.push_back(
                        {"train", run + " " + r.key.dataset + "/" + r.key.model + "/" + r.key.condition +
                                      (r.key.train_on.empty() ? "" : " from " + r.key.train_on),
                         r.error});
                }
            }
        return grid;
    }

    void analyze(const std::string& run) {
        timer_.time("analyze", [&] {
            for (const auto& [id, s] : *splits_) {
                try {
                    const auto table = analysis::pmi_table(s.train, Label::hate, m_.analysis.min_count,
                                                           m_.analysis.smoothing_k);
                    std::vector<analysis::PmiEntry> top(
                        table.begin(), table.begin() + static_cast<long>(std::min(table.size(), m_.analysis.top_n)));
                    store_.put("analyze/" + run + "/" + id + ".pmi.tsv", analysis::to_tsv(top));
                    auto it = supplies_.find({id, Label::hate});
                    if (it == supplies_.end()) continue;
                    const auto& synthetic = it->second.kept;
                    store_.put("analyze/" + run + "/" + id + ".novel.tsv",
                               analysis::to_tsv(analysis::novel_terms(synthetic, s.train, Label::hate, m_.analysis.top_n)));
                    std::vector<std::string> terms;
                    for (const auto& e : top) terms.push_back(e.term);
                    store_.put("analyze/" + run + "/" + id + ".lift.tsv",
                               analysis::to_tsv(analysis::frequency_lift(synthetic, s.train, terms)));
                } catch (const Error& e) {
                    fail("analyze", run + "/" + id, e.what());
                }
            }
        });
    }

    ExperimentManifest m_;
    RunRecord& record_;
    ArtifactStore store_;
    mutable StageTimer timer_;
    mutable std::mutex timer_mutex_;
    std::map<std::string, DatasetData> data_;
    const std::map<std::string, Split>* splits_ = nullptr;
    std::map<SupplyKey, Supply> supplies_;
    std::map<SupplyKey, std::string> supply_errors_;
    std::map<std::string, std::pair<classifier::ConfidenceClassifier, std::string>> filter_classifiers_;
};

eval::ResultsGrid pool_grids(const std::vector<eval::ResultsGrid>& grids) {
    eval::ResultsGrid pooled;
    if (grids.empty()) return pooled;
    pooled.metadata = grids.front().metadata;
    pooled.metadata.seed.reset();
    std::map<eval::CellKey, std::pair<eval::ConfusionCounts, std::string>> acc;
    for (const auto& g : grids)
        for (const auto& [key, cell] : g.cells()) {
            auto& [counts, error] = acc[key];
            if (!cell.ok() || !cell.counts) {
                if (error.empty()) error = cell.error.empty() ? "cell lacks counts" : cell.error;
                continue;
            }
            counts += *cell.counts;
        }
    // Insert dataset-major in the first grid's display order.
    const auto& first = grids.front();
    auto rank = [](const std::vector<std::string>& order, const std::string& v) {
        return static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin());
    };
    std::vector<eval::CellKey> keys;
    for (const auto& [k, _] : acc) keys.push_back(k);
    std::stable_sort(keys.begin(), keys.end(), [&](const eval::CellKey& a, const eval::CellKey& b) {
        return std::tuple(rank(first.datasets(), a.dataset), rank(first.conditions(), a.condition),
                          rank(first.models(), a.model)) <
               std::tuple(rank(first.datasets(), b.dataset), rank(first.conditions(), b.condition),
                          rank(first.models(), b.model));
    });
    for (const auto& k : keys) {
        const auto& [counts, error] = acc.at(k);
        if (!error.empty())
            pooled.set_failed(k, error);
        else
            pooled.set(k, eval::prf(counts), counts);
    }
    return pooled;
}

}  // namespace

// ---------------------------------------------------------------------------
// Run record

json RunRecord::to_json() const {
    auto grid_lines = [](const eval::ResultsGrid& g) {
        json lines = json::array();
        std::istringstream in(g.to_jsonl());
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) lines.push_back(json::parse(line));
        return lines;
    };
    json stages = json::array();
    for (const auto& [s, t] : stage_seconds) stages.push_back({{"stage", s}, {"seconds", t}});
    json filters = json::array();
    for (const auto& f : filter_reports) filters.push_back(filter_record_json(f));
    json failed = json::array();
    for (const auto& f : failures) failed.push_back({{"stage", f.stage}, {"subject", f.subject}, {"message", f.message}});
    json seeds = json::array();
    for (const auto& g : seed_grids) seeds.push_back(grid_lines(g));
    json curve_json = json::array();
    for (const auto& c : curves) {
        json points = json::array();
        for (const auto& p : c.points)
            points.push_back({{"level", p.level},
                              {"precision", p.prf.precision},
                              {"recall", p.prf.recall},
                              {"f1", p.prf.f1}});
        curve_json.push_back({{"dataset", c.dataset}, {"model", c.model}, {"points", points}});
    }
    json averages = json::array();
    for (const auto& a : one_vs_one_averages)
        averages.push_back({{"dataset", a.dataset},
                            {"model", a.model},
                            {"condition", a.condition},
                            {"precision", a.prf.precision},
                            {"recall", a.prf.recall},
                            {"f1", a.prf.f1},
                            {"sources", a.sources}});
    return {{"manifest_hash", manifest_hash},
            {"tool_version", tool_version},
            {"stage_seconds", stages},
            {"filter_reports", filters},
            {"failures", failed},
            {"grid", grid_lines(grid)},
            {"seed_grids", seeds},
            {"curves", curve_json},
            {"one_vs_one_averages", averages},
            {"directory", directory.string()}};
}

RunRecord RunRecord::from_json(const json& j) {
    auto grid_from = [](const json& lines) {
        std::string text;
        for (const auto& l : lines) text += l.dump() + "\n";
        return eval::ResultsGrid::from_jsonl(text);
    };
    try {
        RunRecord r;
        r.manifest_hash = j.at("manifest_hash").get<std::string>();
        r.tool_version = j.at("tool_version").get<std::string>();
        for (const auto& s : j.at("stage_seconds"))
            r.stage_seconds.emplace_back(s.at("stage").get<std::string>(), s.at("seconds").get<double>());
        for (const auto& f : j.at("filter_reports")) r.filter_reports.push_back(filter_record_from_json(f));
        for (const auto& f : j.at("failures"))
            r.failures.push_back({f.at("stage").get<std::string>(), f.at("subject").get<std::string>(),
                                  f.at("message").get<std::string>()});
        r.grid = grid_from(j.at("grid"));
        for (const auto& g : j.at("seed_grids")) r.seed_grids.push_back(grid_from(g));
        for (const auto& c : j.at("curves")) {
            CurveSeries series{c.at("dataset").get<std::string>(), c.at("model").get<std::string>(), {}};
            for (const auto& p : c.at("points"))
                series.points.push_back({p.at("level").get<std::size_t>(),
                                         {p.at("precision").get<double>(), p.at("recall").get<double>(),
                                          p.at("f1").get<double>()}});
            r.curves.push_back(std::move(series));
        }
        for (const auto& a : j.at("one_vs_one_averages"))
            r.one_vs_one_averages.push_back({a.at("dataset").get<std::string>(),
                                             a.at("model").get<std::string>(),
                                             a.at("condition").get<std::string>(),
                                             {a.at("precision").get<double>(), a.at("recall").get<double>(),
                                              a.at("f1").get<double>()},
                                             a.at("sources").get<std::vector<std::string>>()});
        r.directory = j.value("directory", std::string{});
        return r;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed run record: ") + e.what());
    }
}

std::string RunRecord::metrics_jsonl() const {
    std::string out;
    for (const auto& g : seed_grids) out += g.to_jsonl();
    out += grid.to_jsonl();
    for (const auto& a : one_vs_one_averages)
        out += json{{"kind", "average_1v1"},
                    {"dataset", a.dataset},
                    {"model", a.model},
                    {"condition", a.condition},
                    {"precision", a.prf.precision},
                    {"recall", a.prf.recall},
                    {"f1", a.prf.f1},
                    {"sources", a.sources}}
                   .dump() +
               "\n";
    return out;
}

RunRecord load_run_record(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read run record " + path.string());
    try {
        return RunRecord::from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw InputError("run record " + path.string() + ": " + e.what());
    }
}

std::vector<CurveSeries> curves_from_grid(const eval::ResultsGrid& grid) {
    std::vector<CurveSeries> out;
    for (const auto& d : grid.datasets())
        for (const auto& model : grid.models()) {
            const auto* base = grid.find({d, model, "base", ""});
            if (!base || !base->ok()) continue;
            CurveSeries series{d, model, {{0, *base->prf}}};
            std::vector<CurvePoint> gens;
            for (const auto& c : grid.conditions()) {
                if (c.rfind("gen:", 0) != 0) continue;
                const auto* cell = grid.find({d, model, c, ""});
                if (!cell || !cell->ok()) continue;
                gens.push_back({static_cast<std::size_t>(std::stoull(c.substr(4))), *cell->prf});
            }
            std::sort(gens.begin(), gens.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.level < b.level; });
            series.points.insert(series.points.end(), gens.begin(), gens.end());
            if (series.points.size() > 1) out.push_back(std::move(series));
        }
    return out;
}

std::vector<OneVsOneAverage> one_vs_one_averages(const eval::ResultsGrid& grid,
                                                 const std::map<std::string, double>& weights) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::pair<std::string, eval::PRF>>> groups;
    for (const auto& [key, cell] : grid.cells()) {
        if (key.train_on.empty() || !cell.ok()) continue;
        groups[{key.dataset, key.model, key.condition}].emplace_back(key.train_on, *cell.prf);
    }
    std::vector<OneVsOneAverage> out;
    for (const auto& [k, results] : groups) {
        OneVsOneAverage avg{std::get<0>(k), std::get<1>(k), std::get<2>(k), eval::weighted_average_1v1(results, weights), {}};
        for (const auto& r : results) avg.sources.push_back(r.first);
        out.push_back(std::move(avg));
    }
    return out;
}

RunRecord run(const ExperimentManifest& manifest, const RunOptions& options) {
    validate_manifest(manifest);
    RunRecord record;
    record.manifest_hash = manifest_hash(manifest);
    record.directory = manifest.output_dir / record.manifest_hash;
    spdlog::info("run {} (manifest {}) -> {}", manifest.name, record.manifest_hash.substr(0, 12),
                 options.persist ? record.directory.string() : std::string("memory"));

    Pipeline pipeline(manifest, options, record);
    pipeline.ingest();
    for (auto seed : manifest.seeds) {
        const std::string run_tag = "seed-" + std::to_string(seed);
        const auto splits = pipeline.split(seed, run_tag);
        record.seed_grids.push_back(pipeline.evaluate_run(run_tag, seed, splits));
    }
    record.grid = pool_grids(record.seed_grids);
    if (manifest.protocol == Protocol::within) record.curves = curves_from_grid(record.grid);
    if (manifest.protocol == Protocol::one_vs_one)
        record.one_vs_one_averages = one_vs_one_averages(record.grid, record.grid.metadata.dataset_sizes);
    record.stage_seconds = pipeline.timings();

    if (options.persist) {
        fs::create_directories(record.directory / "evaluate");
        {
            std::ofstream out(record.directory / "evaluate" / "metrics.jsonl", std::ios::binary | std::ios::trunc);
            out << record.metrics_jsonl();
        }
        std::ofstream manifest_out(record.directory / "manifest.json");
        manifest_out << manifest_to_json(manifest).dump(2) << '\n';
        std::ofstream out(record.directory / "run_record.json");
        out << record.to_json().dump(2) << '\n';
    }
    return record;
}

}  // namespace augforge::experiment

namespace augforge::eval {

using experiment::ExperimentManifest;
using experiment::Protocol;

ResultsGrid run_protocol(const ExperimentManifest& manifest) {
    return experiment::run(manifest, {false, false}).grid;
}

std::vector<experiment::CurveSeries> augmentation_curve(const ExperimentManifest& manifest) {
    if (manifest.protocol != Protocol::within)
        throw PreconditionError("augmentation_curve needs the within protocol");
    std::vector<std::size_t> levels;
    for (const auto& c : manifest.conditions)
        if (c.condition == augment::Condition::base || c.condition == augment::Condition::gen)
            levels.push_back(c.level);
    if (levels.empty() || levels.front() != 0)
        throw PreconditionError("augmentation_curve levels must start at 0");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) throw PreconditionError("augmentation_curve levels must be strictly ascending");
    const auto grid = run_protocol(manifest);
    std::vector<experiment::CurveSeries> out;
    for (const auto& d : grid.datasets())
        for (const auto& model : grid.models()) {
            experiment::CurveSeries series{d, model, {}};
            for (auto level : levels) {
                const std::string label = level == 0 ? "base" : "gen:" + std::to_string(level);
                const auto* cell = grid.find({d, model, label, ""});
                if (cell && cell->ok()) series.points.push_back({level, *cell->prf});
            }
            out.push_back(std::move(series));
        }
    return out;
}

std::vector<StabilityResult> run_stability(const ExperimentManifest& manifest) {
    using namespace experiment;
    if (manifest.protocol != Protocol::within) throw PreconditionError("the stability protocol is within-dataset");
    validate_manifest(manifest);

    ExperimentManifest m = manifest;
    const auto levels = m.levels();
    const std::size_t level = levels.empty() ? 0 : levels.back();
    if (level == 0) throw PreconditionError("the stability protocol needs a positive augmentation level");
    m.conditions = {{augment::Condition::base, 0}, {augment::Condition::gen, level}};
    const std::string augmented = "gen:" + std::to_string(level);
    const std::uint64_t seed = m.seeds.front();

    RunRecord record;
    Pipeline pipeline(m, {false, false}, record);
    pipeline.ingest();

    std::map<std::string, std::vector<corpus::CorpusSplit>> folds;
    for (const auto& [id, d] : pipeline.data())
        folds[id] = corpus::kfold_splits(d.all, m.folds, derive_seed(seed, kFoldTag, {fnv1a64(id)}));

    std::map<std::pair<std::string, std::string>, StabilityResult> results;
    for (int f = 0; f < m.folds; ++f) {
        const std::string run_tag = "fold-" + std::to_string(f);
        std::map<std::string, Split> splits;
        for (const auto& [id, fs_] : folds) {
            Split s{fs_[static_cast<std::size_t>(f)].train, fs_[static_cast<std::size_t>(f)].test, {}};
            s.key = key_of({"fold", examples_jsonl(s.train), examples_jsonl(s.test)});
            splits[id] = std::move(s);
        }
        const auto grid =
            pipeline.evaluate_run(run_tag, derive_seed(seed, kFoldRunTag, {static_cast<std::uint64_t>(f)}), splits);
        for (const auto& id : m.datasets)
            for (const auto& model : m.models) {
                auto& r = results[{id, model.id}];
                r.dataset = id;
                r.model = model.id;
                r.augmented_condition = augmented;
                const auto* base = grid.find({id, model.id, "base", ""});
                const auto* gen = grid.find({id, model.id, augmented, ""});
                if (base && base->ok()) r.base_runs.emplace_back(run_tag, *base->prf);
                if (gen && gen->ok()) r.augmented_runs.emplace_back(run_tag, *gen->prf);
            }
    }
    std::vector<StabilityResult> out;
    for (auto& [_, r] : results) {
        r.base_sigma = r.base_runs.size() >= 2 ? stability_report(r.base_runs) : std::nan("");
        r.augmented_sigma = r.augmented_runs.size() >= 2 ? stability_report(r.augmented_runs) : std::nan("");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace augforge::eval
