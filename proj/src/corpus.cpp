// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <unordered_map>

#include "augforge/error.hpp"
#include "augforge/rng.hpp"

namespace augforge::corpus {

using nlohmann::json;

std::string_view to_string(LabelTarget target) {
    switch (target) {
        case LabelTarget::hate: return "hate";
        case LabelTarget::non_hate: return "non_hate";
        case LabelTarget::discard: return "discard";
    }
    return "discard";
}

LabelTarget parse_label_target(std::string_view text) {
    if (text == "hate") return LabelTarget::hate;
    if (text == "non_hate") return LabelTarget::non_hate;
    if (text == "discard") return LabelTarget::discard;
    throw InputError("unknown label target '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Catalog

DatasetCatalog::DatasetCatalog(std::vector<DatasetCatalogEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void DatasetCatalog::add(DatasetCatalogEntry entry) {
    if (entry.id.empty()) throw InputError("catalog entry with empty id");
    if (!(entry.expected_hate_ratio > 0.0 && entry.expected_hate_ratio < 1.0))
        throw InputError("catalog entry " + entry.id + ": expected_hate_ratio must lie in (0,1)");
    if (contains(entry.id)) throw InputError("duplicate catalog entry " + entry.id);
    entries_.push_back(std::move(entry));
}

const DatasetCatalogEntry* DatasetCatalog::find(std::string_view id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.id == id; });
    return it == entries_.end() ? nullptr : &*it;
}

const DatasetCatalogEntry& DatasetCatalog::at(std::string_view id) const {
    if (const auto* e = find(id)) return *e;
    throw InputError("unknown dataset id '" + std::string(id) + "'");
}

DatasetCatalog DatasetCatalog::defaults() {
    using T = LabelTarget;
    return DatasetCatalog({
        {"DV", 6.0, 0.24, {{"hate", T::hate}, {"offensive", T::discard}, {"neither", T::non_hate}}},
        {"FT", 53.0, 0.11,
         {{"hateful", T::hate}, {"normal", T::non_hate}, {"abusive", T::discard}, {"spam", T::discard}}},
        {"WS", 13.0, 0.15, {{"racism", T::hate}, {"sexism", T::hate}, {"none", T::non_hate}}},
        {"SF", 9.6, 0.11,
         {{"hate", T::hate}, {"noHate", T::non_hate}, {"relation", T::discard}, {"idk/skip", T::discard}}},
        {"SE", 10.0, 0.40, {{"1", T::hate}, {"0", T::non_hate}}},
    });
}

DatasetCatalog DatasetCatalog::from_json(const json& doc) {
    DatasetCatalog catalog;
    for (const auto& d : doc.at("datasets")) {
        DatasetCatalogEntry entry;
        entry.id = d.at("id").get<std::string>();
        entry.expected_size_k = d.at("expected_size_k").get<double>();
        entry.expected_hate_ratio = d.at("expected_hate_ratio").get<double>();
        for (const auto& [raw, target] : d.at("label_mapping").items())
            entry.label_mapping[raw] = parse_label_target(target.get<std::string>());
        catalog.add(std::move(entry));
    }
    return catalog;
}

json DatasetCatalog::to_json() const {
    json datasets = json::array();
    for (const auto& e : entries_) {
        json mapping = json::object();
        for (const auto& [raw, target] : e.label_mapping) mapping[raw] = std::string(augforge::corpus::to_string(target));
        datasets.push_back({{"id", e.id},
                            {"expected_size_k", e.expected_size_k},
                            {"expected_hate_ratio", e.expected_hate_ratio},
                            {"label_mapping", mapping}});
    }
    return {{"schema_version", 1}, {"datasets", datasets}};
}

DatasetCatalog DatasetCatalog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read catalog " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw InputError("catalog " + path.string() + ": " + e.what());
    }
}

void DatasetCatalog::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write catalog " + path.string());
    out << to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

bool is_emoji(char32_t cp) {
    return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // pictographs, emoticons, flags
           (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
           (cp >= 0x2300 && cp <= 0x23FF) ||    // misc technical (watch, hourglass)
           (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows, stars
           (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
           (cp >= 0xE0020 && cp <= 0xE007F) ||  // tag sequences
           cp == 0x200D || cp == 0x20E3;
}

// Decodes one UTF-8 sequence at text[i]. Returns its length, or 0 when the
// bytes are not valid UTF-8 (they are then passed through unchanged).
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    unsigned char b0 = byte(i);
    std::size_t len;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > text.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    return len;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool is_url(std::string_view token) {
    return starts_with(token, "http://") || starts_with(token, "https://") || starts_with(token, "www.");
}

}  // namespace

Tokens preprocess(std::string_view text, std::size_t max_tokens) {
    if (max_tokens == 0) throw PreconditionError("preprocess: max_tokens must be at least 1");
    Tokens tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_url(current) && current.front() != '@') tokens.push_back(current);
        current.clear();
    };
    for (std::size_t i = 0; i < text.size() && tokens.size() < max_tokens;) {
        char32_t cp = 0;
        std::size_t len = decode_utf8(text, i, cp);
        if (len == 0) {
            current.push_back(text[i]);
            ++i;
            continue;
        }
        if (len == 1 && is_space(text[i])) {
            flush();
        } else if (is_emoji(cp)) {
            flush();
        } else if (len == 1) {
            char c = text[i];
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            current.push_back(c);
        } else {
            current.append(text.substr(i, len));
        }
        i += len;
    }
    if (tokens.size() < max_tokens) flush();
    return tokens;
}

std::string join_tokens(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

// Splits one delimited record, honouring double-quoted fields.
std::vector<std::string> split_delimited(std::string_view line, char delim) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back().push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"' && fields.back().empty()) {
            quoted = true;
        } else if (c == delim) {
            fields.emplace_back();
        } else {
            fields.back().push_back(c);
        }
    }
    return fields;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
}

struct RawRecord {
    std::uint64_t line = 0;
    std::string text;
    std::string label;
};

std::string label_to_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    return value.dump();
}

std::vector<RawRecord> read_raw_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read corpus file " + path.string());
    std::vector<RawRecord> records;
    std::string line;
    std::uint64_t line_no = 0;

    // Skip leading blank lines to find the first record or header.
    std::string first;
    while (std::getline(in, line)) {
        ++line_no;
        if (!blank(line)) {
            first = std::string(strip_cr(line));
            break;
        }
    }
    if (first.empty()) return records;

    const bool json_lines = first.find_first_not_of(" \t") != std::string::npos &&
                            first[first.find_first_not_of(" \t")] == '{';
    if (json_lines) {
        auto parse = [&](std::string_view text, std::uint64_t no) {
            json obj;
            try {
                obj = json::parse(text);
            } catch (const json::exception& e) {
                throw InputError(path.string() + ":" + std::to_string(no) + ": malformed record: " + e.what());
            }
            if (!obj.contains("text") || !obj.contains("label"))
                throw InputError(path.string() + ":" + std::to_string(no) + ": record lacks text or label");
            records.push_back({no, obj.at("text").get<std::string>(), label_to_string(obj.at("label"))});
        };
        parse(first, line_no);
        while (std::getline(in, line)) {
            ++line_no;
            if (blank(line)) continue;
            parse(strip_cr(line), line_no);
        }
        return records;
    }

    const char delim = first.find('\t') != std::string::npos ? '\t' : ',';
    const auto header = split_delimited(first, delim);
    auto column = [&](std::string_view name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw InputError(path.string() + ": header lacks a '" + std::string(name) + "' column");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t text_col = column("text");
    const std::size_t label_col = column("label");
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto fields = split_delimited(strip_cr(line), delim);
        if (fields.size() <= std::max(text_col, label_col))
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": too few fields");
        records.push_back({line_no, std::move(fields[text_col]), std::move(fields[label_col])});
    }
    return records;
}

}  // namespace

IngestResult ingest_dataset(const std::filesystem::path& path, const DatasetCatalogEntry& entry,
                            std::size_t max_tokens) {
    const auto records = read_raw_records(path);
    IngestResult result;
    result.stats.records = records.size();
    const std::string source = entry.id + "/" + path.filename().string();

    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& r : records) {
        auto it = entry.label_mapping.find(r.label);
        if (it == entry.label_mapping.end())
            throw InputError(path.string() + ":" + std::to_string(r.line) + ": raw label '" + r.label +
                             "' is not in the label mapping of dataset " + entry.id);
        if (it->second == LabelTarget::discard) {
            ++result.stats.discarded;
            continue;
        }
        LabeledExample ex;
        ex.id = {source, r.line};
        ex.text = r.text;
        ex.tokens = preprocess(r.text, max_tokens);
        ex.label = it->second == LabelTarget::hate ? Label::hate : Label::non_hate;
        ex.provenance = Provenance::gold;
        ex.source_dataset = entry.id;
        if (seen[r.text]++ > 0) ++result.stats.duplicates;
        result.examples.push_back(std::move(ex));
    }
    if (result.examples.empty())
        throw InputError("dataset " + entry.id + " (" + path.string() + "): no hate or non-hate records");

    result.stats.kept = result.examples.size();
    result.stats.hate_ratio =
        static_cast<double>(count_label(result.examples, Label::hate)) / static_cast<double>(result.stats.kept);
    if (result.stats.duplicates > 0)
        spdlog::warn("dataset {}: {} duplicate texts retained", entry.id, result.stats.duplicates);
    spdlog::info("dataset {}: ingested {} examples ({} discarded), hate ratio {:.3f}", entry.id,
                 result.stats.kept, result.stats.discarded, result.stats.hate_ratio);
    return result;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::size_t floor_scaled(double ratio, std::size_t n) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

std::vector<std::size_t> indices_of(const Examples& examples, Label label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (examples[i].label == label) idx.push_back(i);
    return idx;
}

Examples gather(const Examples& examples, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    Examples out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(examples[i]);
    return out;
}

}  // namespace

CorpusSplit stratified_split(const Examples& examples, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw PreconditionError("stratified_split: ratio must lie in (0, 1]");
    auto hate = indices_of(examples, Label::hate);
    auto non_hate = indices_of(examples, Label::non_hate);
    if (ratio < 1.0 && (hate.empty() || non_hate.empty()))
        throw PreconditionError("stratified_split: both classes must be present when ratio < 1");

    RandomStream rng(seed);
    rng.shuffle(std::span(hate));
    rng.shuffle(std::span(non_hate));

    const std::size_t n_train = floor_scaled(ratio, examples.size());
    const std::size_t hate_train = std::min(floor_scaled(ratio, hate.size()), n_train);
    const std::size_t non_hate_train = std::min(n_train - hate_train, non_hate.size());

    std::vector<std::size_t> train_idx, test_idx;
    train_idx.insert(train_idx.end(), hate.begin(), hate.begin() + static_cast<long>(hate_train));
    test_idx.insert(test_idx.end(), hate.begin() + static_cast<long>(hate_train), hate.end());
    train_idx.insert(train_idx.end(), non_hate.begin(), non_hate.begin() + static_cast<long>(non_hate_train));
    test_idx.insert(test_idx.end(), non_hate.begin() + static_cast<long>(non_hate_train), non_hate.end());

    return {gather(examples, std::move(train_idx)), gather(examples, std::move(test_idx)), seed, ratio};
}

std::vector<CorpusSplit> kfold_splits(const Examples& examples, int k, std::uint64_t seed) {
    if (k < 2) throw PreconditionError("kfold_splits: k must be at least 2");
    auto hate = indices_of(examples, Label::hate);
    auto non_hate = indices_of(examples, Label::non_hate);
    const auto kk = static_cast<std::size_t>(k);
    if (hate.size() < kk || non_hate.size() < kk)
        throw PreconditionError("kfold_splits: k=" + std::to_string(k) + " exceeds a class count (hate " +
                                std::to_string(hate.size()) + ", non_hate " + std::to_string(non_hate.size()) +
                                ")");
    RandomStream rng(seed);
    rng.shuffle(std::span(hate));
    rng.shuffle(std::span(non_hate));

    // Round-robin over hate then non-hate keeps both per-class and total fold
    // sizes within one example of each other.
    std::vector<std::size_t> fold_of(examples.size());
    std::size_t position = 0;
    for (auto i : hate) fold_of[i] = position++ % kk;
    for (auto i : non_hate) fold_of[i] = position++ % kk;

    std::vector<CorpusSplit> splits;
    for (std::size_t f = 0; f < kk; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < examples.size(); ++i) (fold_of[i] == f ? test_idx : train_idx).push_back(i);
        splits.push_back({gather(examples, std::move(train_idx)), gather(examples, std::move(test_idx)), seed,
                          static_cast<double>(k - 1) / k});
    }
    return splits;
}

// ---------------------------------------------------------------------------
// Artifact IO

std::string to_json_line(const LabeledExample& e) {
    json obj = {{"source", e.id.source},
                {"line", e.id.index},
                {"text", e.text},
                {"tokens", e.tokens},
                {"label", std::string(to_string(e.label))},
                {"provenance", std::string(to_string(e.provenance))},
                {"source_dataset", e.source_dataset}};
    if (e.confidence) obj["confidence"] = *e.confidence;
    if (e.trace)
        obj["generator"] = {{"dataset", e.trace->dataset_id},
                            {"class", std::string(to_string(e.trace->class_label))},
                            {"seed", e.trace->seed},
                            {"sample_index", e.trace->sample_index}};
    return obj.dump();
}

LabeledExample from_json_line(std::string_view line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed example record: ") + e.what());
    }
    LabeledExample e;
    e.text = obj.at("text").get<std::string>();
    e.label = parse_label(obj.at("label").get<std::string>());
    e.tokens = obj.contains("tokens") ? obj.at("tokens").get<Tokens>() : preprocess(e.text);
    e.id.source = obj.value("source", std::string{});
    e.id.index = obj.value("line", std::uint64_t{0});
    e.provenance = parse_provenance(obj.value("provenance", std::string("gold")));
    e.source_dataset = obj.value("source_dataset", std::string{});
    if (obj.contains("confidence")) e.confidence = obj.at("confidence").get<double>();
    if (obj.contains("generator")) {
        const auto& g = obj.at("generator");
        e.trace = GeneratorTrace{g.at("dataset").get<std::string>(), parse_label(g.at("class").get<std::string>()),
                                 g.at("seed").get<std::uint64_t>(), g.at("sample_index").get<std::uint64_t>()};
    }
    return e;
}

void write_examples(const std::filesystem::path& path, const Examples& examples) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& e : examples) out << to_json_line(e) << '\n';
}

Examples read_examples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    Examples out;
    std::string line;
    while (std::getline(in, line))
        if (!blank(line)) out.push_back(from_json_line(line));
    return out;
}

}  // namespace augforge::corpus
