// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "augforge/experiment.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::experiment;
using augforge::test::TempDir;

namespace {

/// A desk manifest trimmed to keep runs short, writing under `out`.
ExperimentManifest desk(const char* file, const TempDir& out) {
    auto m = load_manifest(test::source_dir() / "data" / "desk" / file);
    m.output_dir = out.path();
    m.models.resize(1);
    m.seeds = {1};
    m.analysis.enabled = false;
    return m;
}

std::size_t failed_cells(const eval::ResultsGrid& g) {
    std::size_t n = 0;
    for (const auto& [k, c] : g.cells()) n += !c.ok();
    return n;
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("within run fills the grid and persists artifacts") {
        TempDir out;
        auto m = desk("within.json", out);
        m.analysis.enabled = true;
        const auto record = run(m);
        CHECK(record.grid.cells().size() == 3 * 4);
        CHECK(failed_cells(record.grid) == 0);
        CHECK(record.failures.empty());
        CHECK(record.directory == out.path() / manifest_hash(m));
        CHECK(std::filesystem::exists(record.directory / "run_record.json"));
        CHECK(test::read_text(record.directory / "evaluate" / "metrics.jsonl") == record.metrics_jsonl());
        CHECK(load_run_record(record.directory / "run_record.json").metrics_jsonl() == record.metrics_jsonl());
        REQUIRE(record.curves.size() == 3);
        CHECK(record.curves.front().points.size() == 3);
        CHECK(!record.filter_reports.empty());
        for (const auto& f : record.filter_reports) CHECK(f.report.kept >= f.quota);
    }

    TEST_CASE("reruns are byte-identical and resume matches a fresh run") {
        TempDir a, b;
        const auto first = run(desk("within.json", a));
        const auto resumed = run(desk("within.json", a));
        const auto fresh = run(desk("within.json", b), {.persist = true, .resume = false});
        CHECK(first.metrics_jsonl() == fresh.metrics_jsonl());
        CHECK(resumed.metrics_jsonl() == fresh.metrics_jsonl());
    }

    TEST_CASE("cross protocol yields one held-out cell per dataset and model") {
        TempDir out;
        auto m = desk("cross.json", out);
        for (const char* extra : {"DD", "DE"}) {
            auto entry = m.catalog.at("DA");
            entry.id = extra;
            m.catalog.add(entry);
            m.datasets.push_back(extra);
            m.inputs[extra] = m.inputs.at(std::string(extra) == "DD" ? "DB" : "DC");
        }
        m.conditions = {{augment::Condition::cross_4v1, 0}};
        m.models.push_back({"linear-weighted", {}, {}});
        m.models.back().spec.class_weights = true;
        const auto record = run(m, {.persist = false});
        CHECK(record.grid.cells().size() == 5 * 2);
        for (const auto& model : {"linear", "linear-weighted"})
            for (const auto& d : {"DA", "DB", "DC", "DD", "DE"}) {
                const auto* cell = record.grid.find({d, model, "4v1", ""});
                REQUIRE(cell);
                CHECK(cell->ok());
            }
    }

    TEST_CASE("one-vs-one runs produce size-weighted averages") {
        TempDir out;
        const auto record = run(desk("pairs.json", out), {.persist = false});
        CHECK(record.grid.cells().size() == 6 * 2);
        CHECK(record.one_vs_one_averages.size() == 3 * 2);
        for (const auto& a : record.one_vs_one_averages) CHECK(a.sources.size() == 2);
    }

    TEST_CASE("an unavailable backend fails its cells but the run completes") {
        TempDir out;
        auto m = desk("within.json", out);
        m.conditions = {{augment::Condition::base, 0}};
        m.backends["gone"] = {{"/nonexistent/backend"}, {}};
        m.models.push_back({"remote", {}, "gone"});
        m.models.back().spec.backend = classifier::Backend::external;
        const auto record = run(m);
        CHECK(!record.failures.empty());
        CHECK(std::filesystem::exists(record.directory / "run_record.json"));
        for (const auto& d : {"DA", "DB", "DC"}) {
            CHECK(record.grid.find({d, "linear", "base", ""})->ok());
            CHECK(!record.grid.find({d, "remote", "base", ""})->ok());
        }
        CHECK(render_report(record, ReportFormat::table_text).find("FAILED") != std::string::npos);
    }

    TEST_CASE("external backends serve generation, filtering and classification") {
        TempDir out;
        auto m = desk("within.json", out);
        m.datasets = {"DA"};
        m.conditions = {{augment::Condition::base, 0}, {augment::Condition::gen, 200}};
        m.backends["ref"] = {{test::backend_binary().string(), "--seed", "5"}, {}};
        m.generator.backend = generator::Backend::external;
        m.generator_backend = "ref";
        m.filter_classifier.backend = classifier::Backend::external;
        m.filter_backend = "ref";
        m.models.push_back({"remote", {}, "ref"});
        m.models.back().spec.backend = classifier::Backend::external;
        const auto record = run(m, {.persist = false});
        CHECK(record.failures.empty());
        CHECK(failed_cells(record.grid) == 0);
        CHECK(record.grid.cells().size() == 4);
        // The server trains the same linear model, so the base cells agree.
        CHECK(record.grid.find({"DA", "remote", "base", ""})->prf ==
              record.grid.find({"DA", "linear", "base", ""})->prf);
    }

    TEST_CASE("shared filter wiring reuses the base classifier") {
        TempDir a, b;
        auto independent = desk("within.json", a);
        independent.datasets = {"DB"};
        auto shared = independent;
        shared.output_dir = b.path();
        shared.filter_wiring = FilterWiring::shared;
        const auto ri = run(independent, {.persist = false});
        const auto rs = run(shared, {.persist = false});
        CHECK(manifest_hash(independent) != manifest_hash(shared));
        CHECK(ri.grid.find({"DB", "linear", "base", ""})->prf == rs.grid.find({"DB", "linear", "base", ""})->prf);
        CHECK(failed_cells(rs.grid) == 0);
    }

    TEST_CASE("reports") {
        RunRecord empty;
        empty.manifest_hash = std::string(64, '0');
        const auto text = render_report(empty, ReportFormat::table_text);
        CHECK(text.find("Results grid") != std::string::npos);
        CHECK(text.find("model") != std::string::npos);
        CHECK(render_report(empty, ReportFormat::delimited).rfind("section\tdataset", 0) == 0);
        CHECK(render_report(empty, ReportFormat::document).find("# Results") != std::string::npos);

        TempDir out;
        const auto record = run(desk("within.json", out), {.persist = false});
        const auto doc = render_report(record, ReportFormat::document);
        CHECK(doc.find("## Augmentation curve") != std::string::npos);
        CHECK(doc.find("## Average improvement vs. base") != std::string::npos);
        std::size_t curve_lines = 0;
        for (std::size_t pos = 0; (pos = render_report(record, ReportFormat::delimited).find("\ncurve\t", pos)) !=
                                  std::string::npos;
             ++pos)
            ++curve_lines;
        CHECK(curve_lines == 3 * 3);
        CHECK_THROWS(parse_report_format("pdf"));
    }

    TEST_CASE("augmentation curve and stability protocols") {
        TempDir out;
        auto m = desk("within.json", out);
        m.datasets = {"DC"};
        m.conditions = {{augment::Condition::base, 0}};
        const auto single = eval::augmentation_curve(m);
        REQUIRE(single.size() == 1);
        REQUIRE(single.front().points.size() == 1);
        CHECK(single.front().points.front().level == 0);

        m.conditions.push_back({augment::Condition::gen, 400});
        m.folds = 3;
        const auto stability = eval::run_stability(m);
        REQUIRE(stability.size() == 1);
        CHECK(stability.front().base_runs.size() == 3);
        CHECK(stability.front().augmented_runs.size() == 3);
        CHECK(std::isfinite(stability.front().base_sigma));
        CHECK(std::isfinite(stability.front().augmented_sigma));
        CHECK(stability.front().augmented_condition == "gen:400");
    }
}
