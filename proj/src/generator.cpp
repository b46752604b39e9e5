// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/generator.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "augforge/corpus.hpp"
#include "augforge/error.hpp"
#include "augforge/rng.hpp"

namespace augforge::generator {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSampleStreamTag = 0x73616d70;  // "samp"

std::string sequence_key(const Tokens& tokens) {
    std::string key;
    for (const auto& t : tokens) {
        key += t;
        key.push_back('\x1f');
    }
    return key;
}

std::vector<Tokens> token_lists(const Examples& examples) {
    std::vector<Tokens> texts;
    texts.reserve(examples.size());
    for (const auto& e : examples) texts.push_back(e.tokens);
    return texts;
}

void check_examples(const Examples& examples, const GeneratorSpec& spec) {
    spec.validate();
    if (examples.empty()) throw PreconditionError("adapt_generator: no training examples");
    for (const auto& e : examples)
        if (e.label != spec.class_label)
            throw PreconditionError("adapt_generator: mixed-class input (generator for " +
                                    std::string(to_string(spec.class_label)) + " received a " +
                                    std::string(to_string(e.label)) + " example)");
}

// Sampling table for one context: cumulative weights over allowed outcomes,
// or a single greedy choice.
struct StepTable {
    std::vector<double> cumulative;
    NgramModel::Id greedy = -1;
};

StepTable build_table(const NgramModel& model, std::span<const NgramModel::Id> context, bool first_step,
                      double temperature) {
    auto p = model.distribution(context);
    const auto outcomes = p.size();
    p[static_cast<std::size_t>(model.unknown_id())] = 0.0;
    if (first_step) p[static_cast<std::size_t>(model.end_id())] = 0.0;

    StepTable table;
    if (temperature <= kGreedyTemperature) {
        double best = -1.0;
        for (std::size_t w = 0; w < outcomes; ++w)
            if (p[w] > best) {
                best = p[w];
                table.greedy = static_cast<NgramModel::Id>(w);
            }
        return table;
    }
    double max_log = -INFINITY;
    for (double v : p)
        if (v > 0.0) max_log = std::max(max_log, std::log(v));
    table.cumulative.resize(outcomes);
    double acc = 0.0;
    for (std::size_t w = 0; w < outcomes; ++w) {
        if (p[w] > 0.0) acc += std::exp((std::log(p[w]) - max_log) / temperature);
        table.cumulative[w] = acc;
    }
    return table;
}

NgramModel::Id draw(const StepTable& table, RandomStream& rng) {
    if (table.greedy >= 0) return table.greedy;
    const auto& cum = table.cumulative;
    const double u = rng.uniform() * cum.back();
    // upper_bound never lands on a zero-weight outcome, since those repeat
    // the previous cumulative value.
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) {
        // u rounded up to the total; take the last outcome with weight.
        std::size_t w = cum.size() - 1;
        while (w > 0 && cum[w] == cum[w - 1]) --w;
        return static_cast<NgramModel::Id>(w);
    }
    return static_cast<NgramModel::Id>(it - cum.begin());
}

std::vector<SyntheticSequence> sample_reference(const GeneratorHandle& handle, const NgramModel& model,
                                                std::size_t n, std::uint64_t seed) {
    const auto& spec = handle.spec;
    const std::size_t ctx_len = static_cast<std::size_t>(model.order() - 1);
    std::map<std::vector<NgramModel::Id>, StepTable> cache;
    auto table_for = [&](const std::vector<NgramModel::Id>& ctx, bool first) -> const StepTable& {
        std::vector<NgramModel::Id> key = ctx;
        key.push_back(first ? 1 : 0);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(std::move(key), build_table(model, ctx, first, spec.temperature)).first;
        return it->second;
    };

    std::vector<SyntheticSequence> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rng(derive_seed(seed, kSampleStreamTag, {i}));
        std::vector<NgramModel::Id> ctx(ctx_len, model.begin_id());
        SyntheticSequence seq{{}, spec.dataset_id, spec.class_label, seed, i};
        while (seq.tokens.size() < spec.max_tokens) {
            const NgramModel::Id next = draw(table_for(ctx, seq.tokens.empty()), rng);
            if (next == model.end_id()) break;
            seq.tokens.push_back(model.vocabulary()[static_cast<std::size_t>(next)]);
            if (ctx_len > 0) {
                ctx.erase(ctx.begin());
                ctx.push_back(next);
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<SyntheticSequence> sample_external(const GeneratorHandle& handle, backend::Client& client,
                                               std::size_t n, std::uint64_t seed) {
    const auto& spec = handle.spec;
    backend::DecodingParams params = spec.decoding;
    if (!params.temperature) params.temperature = spec.temperature;
    std::vector<SyntheticSequence> out;
    out.reserve(n);
    for (int attempt = 0; attempt < 5 && out.size() < n; ++attempt) {
        for (auto& tokens : client.remote_generate(n - out.size(), spec.max_tokens, params)) {
            if (tokens.empty()) continue;
            out.push_back({std::move(tokens), spec.dataset_id, spec.class_label, seed, out.size()});
        }
    }
    if (out.size() < n)
        throw ProtocolError("backend " + client.name() + " keeps returning empty sequences");
    return out;
}

}  // namespace

std::string_view to_string(Backend backend) {
    return backend == Backend::reference_ngram ? "reference_ngram" : "external";
}

Backend parse_backend(std::string_view text) {
    if (text == "reference_ngram") return Backend::reference_ngram;
    if (text == "external") return Backend::external;
    throw InputError("unknown generator backend '" + std::string(text) + "'");
}

void GeneratorSpec::validate() const {
    if (order < 1) throw PreconditionError("generator order must be at least 1");
    if (!(temperature > 0.0)) throw PreconditionError("generator temperature must be positive");
    if (max_tokens < 1) throw PreconditionError("generator max_tokens must be at least 1");
    if (!(add_k > 0.0)) throw PreconditionError("generator add_k must be positive");
}

GeneratorHandle adapt_generator(const Examples& examples, const GeneratorSpec& spec) {
    check_examples(examples, spec);
    if (spec.backend != Backend::reference_ngram)
        throw PreconditionError("adapt_generator: external backend requires a client");
    auto model = std::make_shared<const NgramModel>(NgramModel::fit(token_lists(examples), spec.order, spec.add_k));
    if (model->vocabulary().empty()) throw PreconditionError("adapt_generator: training texts contain no tokens");
    return {spec, examples.size(), model};
}

GeneratorHandle adapt_generator(const Examples& examples, const GeneratorSpec& spec,
                                std::shared_ptr<backend::Client> client) {
    check_examples(examples, spec);
    if (!client) throw PreconditionError("adapt_generator: null backend client");
    std::vector<std::string> texts;
    std::vector<Label> labels;
    for (const auto& e : examples) {
        texts.push_back(corpus::join_tokens(e.tokens));
        labels.push_back(e.label);
    }
    client->fit(texts, labels);
    GeneratorSpec s = spec;
    s.backend = Backend::external;
    return {s, examples.size(), std::move(client)};
}

std::vector<SyntheticSequence> sample(const GeneratorHandle& handle, std::size_t n, std::uint64_t seed) {
    if (n == 0) return {};
    if (const auto* model = std::get_if<std::shared_ptr<const NgramModel>>(&handle.model))
        return sample_reference(handle, **model, n, seed);
    return sample_external(handle, *std::get<std::shared_ptr<backend::Client>>(handle.model), n, seed);
}

std::vector<SyntheticSequence> dedupe(const std::vector<SyntheticSequence>& candidates, const Examples& gold) {
    std::unordered_set<std::string> seen;
    for (const auto& g : gold) seen.insert(sequence_key(g.tokens));
    std::vector<SyntheticSequence> out;
    for (const auto& c : candidates)
        if (seen.insert(sequence_key(c.tokens)).second) out.push_back(c);
    return out;
}

LabeledExample to_example(const SyntheticSequence& s) {
    LabeledExample e;
    e.id = {"synthetic/" + s.dataset_id + "/" + std::string(to_string(s.class_label)) + "/" + std::to_string(s.seed),
            s.sample_index};
    e.tokens = s.tokens;
    e.text = corpus::join_tokens(s.tokens);
    e.label = s.class_label;
    e.provenance = Provenance::synthetic;
    e.source_dataset = s.dataset_id;
    e.trace = GeneratorTrace{s.dataset_id, s.class_label, s.seed, s.sample_index};
    return e;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json spec_to_json(const GeneratorSpec& s) {
    return {{"dataset_id", s.dataset_id},
            {"class_label", std::string(to_string(s.class_label))},
            {"backend", std::string(to_string(s.backend))},
            {"order", s.order},
            {"temperature", s.temperature},
            {"seed", s.seed},
            {"max_tokens", s.max_tokens},
            {"add_k", s.add_k}};
}

GeneratorSpec spec_from_json(const json& j) {
    GeneratorSpec s;
    s.dataset_id = j.at("dataset_id").get<std::string>();
    s.class_label = parse_label(j.at("class_label").get<std::string>());
    s.backend = parse_backend(j.at("backend").get<std::string>());
    s.order = j.at("order").get<int>();
    s.temperature = j.at("temperature").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.max_tokens = j.at("max_tokens").get<std::size_t>();
    s.add_k = j.at("add_k").get<double>();
    return s;
}

}  // namespace

std::string serialize_generator(const GeneratorHandle& handle) {
    const auto* model = std::get_if<std::shared_ptr<const NgramModel>>(&handle.model);
    if (!model) throw PreconditionError("external generators live in their backend and cannot be saved");
    json doc = {{"format", "augforge-generator"},
                {"format_version", kGeneratorFormatVersion},
                {"spec", spec_to_json(handle.spec)},
                {"training_size", handle.training_size},
                {"model", (*model)->to_json()}};
    return doc.dump() + "\n";
}

GeneratorHandle deserialize_generator(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed generator artifact: ") + e.what());
    }
    if (doc.value("format", std::string{}) != "augforge-generator")
        throw InputError("not a generator artifact");
    const int version = doc.at("format_version").get<int>();
    if (version != kGeneratorFormatVersion)
        throw InputError("unsupported generator format version " + std::to_string(version));
    GeneratorHandle h;
    h.spec = spec_from_json(doc.at("spec"));
    h.training_size = doc.at("training_size").get<std::size_t>();
    h.model = std::make_shared<const NgramModel>(NgramModel::from_json(doc.at("model")));
    return h;
}

void save_generator(const std::filesystem::path& path, const GeneratorHandle& handle) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << serialize_generator(handle);
}

GeneratorHandle load_generator(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_generator(text);
}

void write_sequences(const std::filesystem::path& path, const std::vector<SyntheticSequence>& sequences) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& s : sequences)
        out << json{{"tokens", s.tokens},
                    {"dataset", s.dataset_id},
                    {"class", std::string(to_string(s.class_label))},
                    {"seed", s.seed},
                    {"sample_index", s.sample_index}}
                   .dump()
            << '\n';
}

std::vector<SyntheticSequence> read_sequences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    std::vector<SyntheticSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        out.push_back({j.at("tokens").get<Tokens>(), j.at("dataset").get<std::string>(),
                       parse_label(j.at("class").get<std::string>()), j.at("seed").get<std::uint64_t>(),
                       j.at("sample_index").get<std::uint64_t>()});
    }
    return out;
}

}  // namespace augforge::generator
