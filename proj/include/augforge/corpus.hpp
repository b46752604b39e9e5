// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "augforge/types.hpp"

namespace augforge::corpus {

inline constexpr std::size_t kDefaultMaxTokens = 30;

enum class LabelTarget : std::uint8_t { hate, non_hate, discard };

std::string_view to_string(LabelTarget target);
LabelTarget parse_label_target(std::string_view text);

struct DatasetCatalogEntry {
    std::string id;
    /// Number of labeled examples, in thousands.
    double expected_size_k = 0.0;
    double expected_hate_ratio = 0.0;
    std::map<std::string, LabelTarget> label_mapping;
};

class DatasetCatalog {
public:
    DatasetCatalog() = default;
    explicit DatasetCatalog(std::vector<DatasetCatalogEntry> entries);

    /// The five hate speech datasets DV, FT, WS, SF and SE with their sizes,
    /// hate ratios and raw label schemes.
    static DatasetCatalog defaults();
    static DatasetCatalog from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    static DatasetCatalog load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const DatasetCatalogEntry* find(std::string_view id) const;
    const DatasetCatalogEntry& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    const std::vector<DatasetCatalogEntry>& entries() const { return entries_; }

    void add(DatasetCatalogEntry entry);

private:
    std::vector<DatasetCatalogEntry> entries_;
};

/// Normalizes raw text into tokens: emoji symbols become separators, the
/// text is split on whitespace, ASCII letters are lowercased, and URL and
/// user-mention tokens are dropped. At most max_tokens tokens are kept.
Tokens preprocess(std::string_view text, std::size_t max_tokens = kDefaultMaxTokens);

std::string join_tokens(const Tokens& tokens);

struct IngestStats {
    std::size_t records = 0;
    std::size_t kept = 0;
    std::size_t discarded = 0;
    std::size_t duplicates = 0;
    double hate_ratio = 0.0;
};

struct IngestResult {
    Examples examples;
    IngestStats stats;
};

/// Reads a corpus file (JSON lines with "text"/"label", or a delimited file
/// with a header naming those columns) and maps raw labels through the
/// entry's label mapping. Labels mapped to discard are dropped; a raw label
/// missing from the mapping is an error.
IngestResult ingest_dataset(const std::filesystem::path& path, const DatasetCatalogEntry& entry,
                            std::size_t max_tokens = kDefaultMaxTokens);

struct CorpusSplit {
    Examples train;
    Examples test;
    std::uint64_t seed = 0;
    double ratio = 0.0;
};

/// Stratified train/test split. Train receives floor(ratio * n) examples of
/// which floor(ratio * n_hate) are hate; the rest goes to test. Both halves
/// keep the input order.
CorpusSplit stratified_split(const Examples& examples, double ratio, std::uint64_t seed);

/// Stratified k-fold partition: split i tests on fold i and trains on the
/// remaining folds.
std::vector<CorpusSplit> kfold_splits(const Examples& examples, int k, std::uint64_t seed);

// Artifact IO: one JSON object per line, a superset of the ingestion format.

std::string to_json_line(const LabeledExample& example);
LabeledExample from_json_line(std::string_view line);
void write_examples(const std::filesystem::path& path, const Examples& examples);
Examples read_examples(const std::filesystem::path& path);

}  // namespace augforge::corpus
