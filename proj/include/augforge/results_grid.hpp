// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "augforge/metrics.hpp"

namespace augforge::eval {

struct CellKey {
    std::string dataset;  // evaluated (test) dataset
    std::string model;
    std::string condition;
    /// Training dataset for one-vs-one cells; empty otherwise.
    std::string train_on;

    auto operator<=>(const CellKey&) const = default;
    bool operator==(const CellKey&) const = default;
};

struct Cell {
    std::optional<PRF> prf;
    std::optional<ConfusionCounts> counts;
    std::string error;

    bool ok() const { return prf.has_value(); }
};

struct GridMetadata {
    std::optional<std::uint64_t> seed;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> levels;
    /// Weights for size-weighted one-vs-one averages.
    std::map<std::string, double> dataset_sizes;
};

/// Results indexed by (dataset, model, condition[, training dataset]).
class ResultsGrid {
public:
    /// Throws on a duplicate key.
    void set(const CellKey& key, const PRF& prf, std::optional<ConfusionCounts> counts = {});
    void set_failed(const CellKey& key, std::string message);

    const Cell* find(const CellKey& key) const;
    const std::map<CellKey, Cell>& cells() const { return cells_; }
    bool empty() const { return cells_.empty(); }

    /// Cells of one condition only.
    ResultsGrid select(std::string_view condition) const;

    /// Distinct values in first-insertion order.
    const std::vector<std::string>& datasets() const { return datasets_; }
    const std::vector<std::string>& models() const { return models_; }
    const std::vector<std::string>& conditions() const { return conditions_; }

    GridMetadata metadata;

    /// One JSON object per line: a header line then one line per cell in key
    /// order.
    std::string to_jsonl() const;
    static ResultsGrid from_jsonl(std::string_view text);

private:
    void note_key(const CellKey& key);

    std::map<CellKey, Cell> cells_;
    std::vector<std::string> datasets_;
    std::vector<std::string> models_;
    std::vector<std::string> conditions_;
};

struct ImprovementSummary {
    /// (model, metric) -> mean relative change over datasets, in percent.
    std::map<std::pair<std::string, Metric>, double> percent;
    /// Cells left out (failed or zero base), with reasons.
    std::vector<std::string> excluded;
};

/// For each model and metric, the unweighted mean over datasets of
/// (treated - base) / base, in percent. Cells are matched on everything but
/// the condition.
ImprovementSummary relative_improvement_summary(const ResultsGrid& base, const ResultsGrid& treated);

/// Loads a published-results fixture: tab-separated dataset, model,
/// condition, P, R, F1 in percentage points ('#' starts a comment). Rejects
/// cells whose F1 deviates from 2PR/(P+R) by more than f1_tolerance points.
ResultsGrid load_table_fixture(const std::filesystem::path& path, double f1_tolerance = 0.1);

}  // namespace augforge::eval
