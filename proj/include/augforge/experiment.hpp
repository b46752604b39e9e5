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

#include "augforge/filter.hpp"
#include "augforge/manifest.hpp"
#include "augforge/results_grid.hpp"

namespace augforge::experiment {

inline constexpr const char* kToolVersion = "0.1.0";

/// Stage names in execution order.
inline constexpr const char* kStages[] = {"ingest", "split",   "adapt",    "generate", "filter",
                                          "assemble", "train", "evaluate", "analyze"};

struct FilterRecord {
    std::string run;  // "seed-<n>" or "fold-<k>"
    std::string dataset;
    Label label = Label::hate;
    std::size_t requested = 0;
    std::size_t quota = 0;
    int rounds = 0;
    filter::FilterReport report;
};

struct StageFailure {
    std::string stage;
    std::string subject;
    std::string message;
};

struct CurvePoint {
    std::size_t level = 0;
    eval::PRF prf;
};

struct CurveSeries {
    std::string dataset;
    std::string model;
    std::vector<CurvePoint> points;
};

/// Size-weighted one-vs-one average for one (test dataset, model, condition).
struct OneVsOneAverage {
    std::string dataset;
    std::string model;
    std::string condition;
    eval::PRF prf;
    std::vector<std::string> sources;
};

struct RunRecord {
    std::string manifest_hash;
    std::string tool_version = kToolVersion;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<FilterRecord> filter_reports;
    std::vector<StageFailure> failures;
    /// Counts pooled over seeds.
    eval::ResultsGrid grid;
    std::vector<eval::ResultsGrid> seed_grids;
    std::vector<CurveSeries> curves;
    std::vector<OneVsOneAverage> one_vs_one_averages;
    /// Run directory: <output_dir>/<manifest hash>.
    std::filesystem::path directory;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
    /// The byte-deterministic metrics artifact (no timings).
    std::string metrics_jsonl() const;
};

struct RunOptions {
    /// Write artifacts under the run directory.
    bool persist = true;
    /// Reuse persisted artifacts whose content keys match.
    bool resume = true;
};

/// ingest -> split -> adapt -> generate -> dedupe/filter -> assemble -> train
/// -> evaluate -> analyze, once per seed.
RunRecord run(const ExperimentManifest& manifest, const RunOptions& options = {});

RunRecord load_run_record(const std::filesystem::path& path);

enum class ReportFormat { table_text, delimited, document };
ReportFormat parse_report_format(std::string_view text);

std::string render_report(const RunRecord& record, ReportFormat format);

/// Series per (dataset, model) from a within-protocol grid holding a base
/// condition and gen:N conditions.
std::vector<CurveSeries> curves_from_grid(const eval::ResultsGrid& grid);

/// Size-weighted averages over one-vs-one cells sharing test dataset, model
/// and condition.
std::vector<OneVsOneAverage> one_vs_one_averages(const eval::ResultsGrid& grid,
                                                 const std::map<std::string, double>& weights);

}  // namespace augforge::experiment

namespace augforge::eval {

/// In-memory run of the manifest's protocol; the grid pools counts over seeds.
ResultsGrid run_protocol(const experiment::ExperimentManifest& manifest);

/// One within-dataset evaluation per level, sharing splits and seeds. Levels
/// must be ascending and start at 0.
std::vector<experiment::CurveSeries> augmentation_curve(const experiment::ExperimentManifest& manifest);

struct StabilityResult {
    std::string dataset;
    std::string model;
    std::string augmented_condition;
    std::vector<std::pair<std::string, PRF>> base_runs;
    std::vector<std::pair<std::string, PRF>> augmented_runs;
    double base_sigma = 0.0;
    double augmented_sigma = 0.0;
};

/// k-fold runs (manifest folds) at the base condition and at the manifest's
/// highest level, using the first seed.
std::vector<StabilityResult> run_stability(const experiment::ExperimentManifest& manifest);

}  // namespace augforge::eval
