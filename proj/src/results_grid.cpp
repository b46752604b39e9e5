// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/results_grid.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "augforge/error.hpp"

namespace augforge::eval {

using nlohmann::json;

namespace {

void push_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

void ResultsGrid::note_key(const CellKey& key) {
    if (cells_.count(key))
        throw PreconditionError("duplicate grid cell (" + key.dataset + ", " + key.model + ", " + key.condition +
                                (key.train_on.empty() ? "" : ", " + key.train_on) + ")");
    push_unique(datasets_, key.dataset);
    push_unique(models_, key.model);
    push_unique(conditions_, key.condition);
}

void ResultsGrid::set(const CellKey& key, const PRF& prf, std::optional<ConfusionCounts> counts) {
    note_key(key);
    cells_[key] = Cell{prf, counts, {}};
}

void ResultsGrid::set_failed(const CellKey& key, std::string message) {
    note_key(key);
    cells_[key] = Cell{std::nullopt, std::nullopt, std::move(message)};
}

const Cell* ResultsGrid::find(const CellKey& key) const {
    auto it = cells_.find(key);
    return it == cells_.end() ? nullptr : &it->second;
}

ResultsGrid ResultsGrid::select(std::string_view condition) const {
    ResultsGrid out;
    out.metadata = metadata;
    for (const auto& [key, cell] : cells_) {
        if (key.condition != condition) continue;
        out.note_key(key);
        out.cells_[key] = cell;
    }
    // Keep the original first-insertion order of datasets and models.
    auto reorder = [](std::vector<std::string>& subset, const std::vector<std::string>& order) {
        std::vector<std::string> sorted;
        for (const auto& s : order)
            if (std::find(subset.begin(), subset.end(), s) != subset.end()) sorted.push_back(s);
        subset = std::move(sorted);
    };
    reorder(out.datasets_, datasets_);
    reorder(out.models_, models_);
    return out;
}

std::string ResultsGrid::to_jsonl() const {
    std::ostringstream out;
    json header = {{"kind", "grid"},
                   {"datasets", datasets_},
                   {"models", models_},
                   {"conditions", conditions_},
                   {"seeds", metadata.seeds},
                   {"levels", metadata.levels},
                   {"dataset_sizes", metadata.dataset_sizes}};
    if (metadata.seed) header["seed"] = *metadata.seed;
    out << header.dump() << '\n';
    for (const auto& [key, cell] : cells_) {
        json line = {{"kind", "cell"},
                     {"dataset", key.dataset},
                     {"model", key.model},
                     {"condition", key.condition},
                     {"train_on", key.train_on}};
        if (metadata.seed) line["seed"] = *metadata.seed;
        if (cell.prf) {
            line["precision"] = cell.prf->precision;
            line["recall"] = cell.prf->recall;
            line["f1"] = cell.prf->f1;
        } else {
            line["error"] = cell.error;
        }
        if (cell.counts)
            line["counts"] = {{"tp", cell.counts->tp}, {"fp", cell.counts->fp}, {"fn", cell.counts->fn},
                              {"tn", cell.counts->tn}};
        out << line.dump() << '\n';
    }
    return out.str();
}

ResultsGrid ResultsGrid::from_jsonl(std::string_view text) {
    ResultsGrid grid;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header_seen = false;
    std::vector<std::string> datasets, models, conditions;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "grid") {
            header_seen = true;
            datasets = j.at("datasets").get<std::vector<std::string>>();
            models = j.at("models").get<std::vector<std::string>>();
            conditions = j.at("conditions").get<std::vector<std::string>>();
            grid.metadata.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            grid.metadata.levels = j.at("levels").get<std::vector<std::size_t>>();
            grid.metadata.dataset_sizes = j.at("dataset_sizes").get<std::map<std::string, double>>();
            if (j.contains("seed")) grid.metadata.seed = j.at("seed").get<std::uint64_t>();
            continue;
        }
        CellKey key{j.at("dataset").get<std::string>(), j.at("model").get<std::string>(),
                    j.at("condition").get<std::string>(), j.value("train_on", std::string{})};
        std::optional<ConfusionCounts> counts;
        if (j.contains("counts")) {
            const auto& c = j.at("counts");
            counts = ConfusionCounts{c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                                     c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
        }
        if (j.contains("error")) {
            grid.set_failed(key, j.at("error").get<std::string>());
        } else {
            grid.set(key, PRF{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()},
                     counts);
        }
    }
    if (!header_seen) throw InputError("results grid lacks a header line");
    grid.datasets_ = datasets;
    grid.models_ = models;
    grid.conditions_ = conditions;
    return grid;
}

ImprovementSummary relative_improvement_summary(const ResultsGrid& base, const ResultsGrid& treated) {
    auto strip = [](CellKey k) {
        k.condition.clear();
        return k;
    };
    std::map<CellKey, const Cell*> base_cells, treated_cells;
    for (const auto& [k, c] : base.cells())
        if (!base_cells.emplace(strip(k), &c).second)
            throw PreconditionError("relative_improvement_summary: base grid holds several conditions for " +
                                    k.dataset + "/" + k.model);
    for (const auto& [k, c] : treated.cells())
        if (!treated_cells.emplace(strip(k), &c).second)
            throw PreconditionError("relative_improvement_summary: treated grid holds several conditions for " +
                                    k.dataset + "/" + k.model);
    for (const auto& [k, _] : treated_cells)
        if (!base_cells.count(k))
            throw PreconditionError("relative_improvement_summary: no base cell for " + k.dataset + "/" + k.model);

    ImprovementSummary summary;
    std::map<std::pair<std::string, Metric>, std::pair<double, std::size_t>> acc;
    for (const auto& [k, t] : treated_cells) {
        const Cell* b = base_cells.at(k);
        if (!b->ok() || !t->ok()) {
            summary.excluded.push_back(k.dataset + "/" + k.model + ": failed cell");
            continue;
        }
        for (auto m : {Metric::precision, Metric::recall, Metric::f1}) {
            const double bv = get(*b->prf, m);
            if (bv == 0.0) {
                summary.excluded.push_back(k.dataset + "/" + k.model + "/" + std::string(to_string(m)) +
                                           ": zero base value");
                continue;
            }
            auto& [sum, n] = acc[{k.model, m}];
            sum += (get(*t->prf, m) - bv) / bv;
            ++n;
        }
    }
    for (const auto& [key, v] : acc) summary.percent[key] = 100.0 * v.first / static_cast<double>(v.second);
    for (const auto& e : summary.excluded) spdlog::warn("improvement summary excludes {}", e);
    return summary;
}

ResultsGrid load_table_fixture(const std::filesystem::path& path, double f1_tolerance) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read fixture " + path.string());
    ResultsGrid grid;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string dataset, model, condition;
        double p, r, f1;
        if (!std::getline(fields, dataset, '\t') || !std::getline(fields, model, '\t') ||
            !std::getline(fields, condition, '\t') || !(fields >> p >> r >> f1))
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed fixture row");
        const double hm = harmonic_mean(p, r);
        if (std::abs(f1 - hm) > f1_tolerance)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": F1 " + std::to_string(f1) +
                             " inconsistent with P/R (harmonic mean " + std::to_string(hm) + ")");
        grid.set({dataset, model, condition, {}}, PRF{p / 100.0, r / 100.0, f1 / 100.0});
    }
    return grid;
}

}  // namespace augforge::eval
