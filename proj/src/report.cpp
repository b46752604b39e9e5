// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "augforge/error.hpp"
#include "augforge/experiment.hpp"

namespace augforge::experiment {

ReportFormat parse_report_format(std::string_view text) {
    if (text == "table-text" || text == "text") return ReportFormat::table_text;
    if (text == "delimited" || text == "tsv") return ReportFormat::delimited;
    if (text == "document" || text == "markdown") return ReportFormat::document;
    throw InputError("unknown report format '" + std::string(text) + "'");
}

namespace {

struct Column {
    std::string condition;
    std::string train_on;

    std::string title() const { return train_on.empty() ? condition : condition + " <- " + train_on; }
    bool operator==(const Column&) const = default;
};

std::string pct(double v) { return fmt::format("{:.1f}", 100.0 * v); }

std::string signed_pct(double v) { return std::isfinite(v) ? fmt::format("{:+.1f}", v) : std::string("n/a"); }

std::vector<Column> columns_of(const eval::ResultsGrid& grid, const std::string& dataset) {
    std::vector<Column> cols;
    for (const auto& c : grid.conditions()) {
        std::vector<std::string> sources;
        for (const auto& [k, _] : grid.cells())
            if (k.dataset == dataset && k.condition == c &&
                std::find(sources.begin(), sources.end(), k.train_on) == sources.end())
                sources.push_back(k.train_on);
        for (const auto& s : sources) cols.push_back({c, s});
    }
    return cols;
}

/// The unaugmented reference condition of the grid, if any.
std::string baseline_of(const eval::ResultsGrid& grid) {
    for (const char* b : {"base", "4v1"})
        if (std::find(grid.conditions().begin(), grid.conditions().end(), b) != grid.conditions().end()) return b;
    return {};
}

struct SummaryRow {
    std::string model;
    std::string condition;
    double p = NAN, r = NAN, f1 = NAN;
};

std::vector<SummaryRow> summary_rows(const eval::ResultsGrid& grid) {
    std::vector<SummaryRow> rows;
    const auto baseline = baseline_of(grid);
    if (baseline.empty()) return rows;
    const auto base = grid.select(baseline);
    for (const auto& c : grid.conditions()) {
        if (c == baseline) continue;
        eval::ImprovementSummary summary;
        try {
            summary = eval::relative_improvement_summary(base, grid.select(c));
        } catch (const PreconditionError&) {
            continue;
        }
        for (const auto& model : grid.models()) {
            SummaryRow row{model, c};
            auto get = [&](eval::Metric m) {
                auto it = summary.percent.find({model, m});
                return it == summary.percent.end() ? NAN : it->second;
            };
            row.p = get(eval::Metric::precision);
            row.r = get(eval::Metric::recall);
            row.f1 = get(eval::Metric::f1);
            rows.push_back(row);
        }
    }
    return rows;
}

/// Best F1 per (dataset, model) over the columns.
double best_f1(const eval::ResultsGrid& grid, const std::string& dataset, const std::string& model,
               const std::vector<Column>& cols) {
    double best = -1.0;
    for (const auto& col : cols)
        if (const auto* cell = grid.find({dataset, model, col.condition, col.train_on}); cell && cell->ok())
            best = std::max(best, cell->prf->f1);
    return best;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_text(const RunRecord& record) {
    const auto& grid = record.grid;
    std::size_t w = 10;
    for (const auto& m : grid.models()) w = std::max(w, m.size() + 1);
    std::string out = fmt::format("Results grid (manifest {}, tool {})\n", record.manifest_hash.substr(0, 12),
                                  record.tool_version);
    out += "Cells: P / R / F1 in percent; * marks the best F1 per dataset and model.\n";
    if (grid.datasets().empty()) out += "\n" + pad("model", w) + "| (no cells)\n";
    for (const auto& d : grid.datasets()) {
        const auto cols = columns_of(grid, d);
        out += fmt::format("\n[{}]\n", d);
        std::string header = pad("model", w);
        for (const auto& c : cols) header += "| " + pad(c.title(), 20);
        out += header + "\n" + std::string(header.size(), '-') + "\n";
        for (const auto& model : grid.models()) {
            const double best = best_f1(grid, d, model, cols);
            std::string line = pad(model, w);
            for (const auto& col : cols) {
                const auto* cell = grid.find({d, model, col.condition, col.train_on});
                std::string text;
                if (!cell)
                    text = "-";
                else if (!cell->ok())
                    text = "FAILED";
                else
                    text = fmt::format("{} {} {}{}", pct(cell->prf->precision), pct(cell->prf->recall),
                                       pct(cell->prf->f1), cell->prf->f1 == best ? "*" : "");
                line += "| " + pad(text, 20);
            }
            out += line + "\n";
        }
    }

    out += "\nAverage improvement vs. base (percent):\n";
    out += pad("model", w) + "| " + pad("condition", 16) + "| P       | R       | F1\n";
    for (const auto& r : summary_rows(grid))
        out += pad(r.model, w) + "| " + pad(r.condition, 16) + "| " + pad(signed_pct(r.p), 8) + "| " +
               pad(signed_pct(r.r), 8) + "| " + signed_pct(r.f1) + "\n";

    if (!record.one_vs_one_averages.empty()) {
        out += "\nOne-vs-one size-weighted averages:\n";
        for (const auto& a : record.one_vs_one_averages)
            out += fmt::format("{} {} {}: P {} R {} F1 {}\n", a.dataset, a.model, a.condition, pct(a.prf.precision),
                               pct(a.prf.recall), pct(a.prf.f1));
    }
    if (!record.curves.empty()) {
        out += "\nAugmentation curve (level, F1):\n";
        for (const auto& c : record.curves)
            for (const auto& p : c.points) out += fmt::format("{} {} {} {}\n", c.dataset, c.model, p.level, pct(p.prf.f1));
    }
    if (!record.filter_reports.empty()) {
        out += "\nFilter reports:\n";
        for (const auto& f : record.filter_reports)
            out += fmt::format("{} {} {}: generated {} candidates {} kept {} (quota {}, rounds {})\n", f.run,
                               f.dataset, to_string(f.label), f.report.generated, f.report.candidates, f.report.kept,
                               f.quota, f.rounds);
    }
    if (!record.failures.empty()) {
        out += "\nFailures:\n";
        for (const auto& f : record.failures) out += fmt::format("{} {}: {}\n", f.stage, f.subject, f.message);
    }
    return out;
}

std::string render_delimited(const RunRecord& record) {
    const auto& grid = record.grid;
    std::string out = "section\tdataset\tmodel\tcondition\ttrain_on\tprecision\trecall\tf1\tnote\n";
    for (const auto& d : grid.datasets()) {
        const auto cols = columns_of(grid, d);
        for (const auto& model : grid.models()) {
            const double best = best_f1(grid, d, model, cols);
            for (const auto& col : cols) {
                const auto* cell = grid.find({d, model, col.condition, col.train_on});
                if (!cell) continue;
                if (!cell->ok()) {
                    out += fmt::format("cell\t{}\t{}\t{}\t{}\t\t\t\tfailed: {}\n", d, model, col.condition,
                                       col.train_on, cell->error);
                    continue;
                }
                out += fmt::format("cell\t{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\n", d, model, col.condition,
                                   col.train_on, cell->prf->precision, cell->prf->recall, cell->prf->f1,
                                   cell->prf->f1 == best ? "best" : "");
            }
        }
    }
    for (const auto& r : summary_rows(grid))
        out += fmt::format("summary\t\t{}\t{}\t\t{:.4f}\t{:.4f}\t{:.4f}\tpercent vs base\n", r.model, r.condition, r.p,
                           r.r, r.f1);
    for (const auto& a : record.one_vs_one_averages)
        out += fmt::format("average_1v1\t{}\t{}\t{}\t\t{:.6f}\t{:.6f}\t{:.6f}\t\n", a.dataset, a.model, a.condition,
                           a.prf.precision, a.prf.recall, a.prf.f1);
    for (const auto& c : record.curves)
        for (const auto& p : c.points)
            out += fmt::format("curve\t{}\t{}\t{}\t\t{:.6f}\t{:.6f}\t{:.6f}\t\n", c.dataset, c.model, p.level,
                               p.prf.precision, p.prf.recall, p.prf.f1);
    return out;
}

std::string render_document(const RunRecord& record) {
    const auto& grid = record.grid;
    std::string out = fmt::format("# Results\n\nManifest `{}`, tool {}. Cells are P / R / F1 in percent; the best F1 "
                                  "per dataset and model is bold.\n",
                                  record.manifest_hash, record.tool_version);
    if (grid.datasets().empty()) out += "\n| model |\n|---|\n";
    for (const auto& d : grid.datasets()) {
        const auto cols = columns_of(grid, d);
        out += fmt::format("\n## {}\n\n| model |", d);
        for (const auto& c : cols) out += " " + c.title() + " |";
        out += "\n|---|";
        for (std::size_t i = 0; i < cols.size(); ++i) out += "---|";
        out += "\n";
        for (const auto& model : grid.models()) {
            const double best = best_f1(grid, d, model, cols);
            out += "| " + model + " |";
            for (const auto& col : cols) {
                const auto* cell = grid.find({d, model, col.condition, col.train_on});
                if (!cell)
                    out += " - |";
                else if (!cell->ok())
                    out += " failed |";
                else {
                    const auto f1 = pct(cell->prf->f1);
                    out += fmt::format(" {} / {} / {} |", pct(cell->prf->precision), pct(cell->prf->recall),
                                       cell->prf->f1 == best ? "**" + f1 + "**" : f1);
                }
            }
            out += "\n";
        }
    }
    out += "\n## Average improvement vs. base\n\n| model | condition | P | R | F1 |\n|---|---|---|---|---|\n";
    for (const auto& r : summary_rows(grid))
        out += fmt::format("| {} | {} | {} | {} | {} |\n", r.model, r.condition, signed_pct(r.p), signed_pct(r.r),
                           signed_pct(r.f1));
    if (!record.one_vs_one_averages.empty()) {
        out += "\n## One-vs-one weighted averages\n\n| dataset | model | condition | P | R | F1 |\n|---|---|---|---|---|---|\n";
        for (const auto& a : record.one_vs_one_averages)
            out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", a.dataset, a.model, a.condition,
                               pct(a.prf.precision), pct(a.prf.recall), pct(a.prf.f1));
    }
    if (!record.curves.empty()) {
        out += "\n## Augmentation curve\n\n| dataset | model | level | F1 |\n|---|---|---|---|\n";
        for (const auto& c : record.curves)
            for (const auto& p : c.points)
                out += fmt::format("| {} | {} | {} | {} |\n", c.dataset, c.model, p.level, pct(p.prf.f1));
    }
    if (!record.failures.empty()) {
        out += "\n## Failures\n\n";
        for (const auto& f : record.failures) out += fmt::format("- {} {}: {}\n", f.stage, f.subject, f.message);
    }
    return out;
}

}  // namespace

std::string render_report(const RunRecord& record, ReportFormat format) {
    switch (format) {
        case ReportFormat::table_text: return render_text(record);
        case ReportFormat::delimited: return render_delimited(record);
        case ReportFormat::document: return render_document(record);
    }
    return render_text(record);
}

}  // namespace augforge::experiment
