// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "augforge/error.hpp"
#include "augforge/metrics.hpp"
#include "augforge/results_grid.hpp"
#include "augforge/rng.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::eval;

namespace {

constexpr Label H = Label::hate;
constexpr Label N = Label::non_hate;

PRF p(double precision, double recall, double f1 = -1) {
    return {precision, recall, f1 < 0 ? harmonic_mean(precision, recall) : f1};
}

ResultsGrid grid_of(const std::string& condition, const std::vector<std::pair<std::string, PRF>>& cells,
                    const std::string& model = "M") {
    ResultsGrid g;
    for (const auto& [dataset, prf] : cells) g.set({dataset, model, condition, ""}, prf);
    return g;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("confusion tallies with hate positive") {
        const std::vector<Label> pred = {H, H, N}, gold = {H, N, N};
        const auto c = confusion(pred, gold);
        CHECK(c == ConfusionCounts{1, 1, 0, 1});
        const auto perfect = confusion(gold, gold);
        CHECK(perfect.fp == 0);
        CHECK(perfect.fn == 0);
        CHECK_THROWS_AS(confusion(pred, std::vector<Label>{H}), PreconditionError);
    }

    TEST_CASE("twenty-example fixture matches a hand tally") {
        // gold: 8 hate then 12 non-hate. Planted errors: hate 2,5,7 missed;
        // non-hate 9 and 15 flagged.
        std::vector<Label> gold(20, N), pred(20, N);
        for (int i = 0; i < 8; ++i) gold[i] = pred[i] = H;
        pred[2] = pred[5] = pred[7] = N;
        pred[9] = pred[15] = H;
        CHECK(confusion(pred, gold) == ConfusionCounts{5, 2, 3, 10});
    }

    TEST_CASE("precision, recall and F1") {
        const auto r = prf({13, 2, 7, 0});
        CHECK(r.precision == doctest::Approx(13.0 / 15.0));
        CHECK(r.recall == doctest::Approx(0.65));
        CHECK(r.f1 == doctest::Approx(0.743).epsilon(1e-3));
        CHECK(prf({}) == PRF{0, 0, 0});
        CHECK(harmonic_mean(0.730, 0.650) == doctest::Approx(0.688).epsilon(1e-3));
        CHECK(harmonic_mean(0.0, 0.0) == 0.0);
        const auto nh = prf_non_hate({5, 2, 3, 10});
        CHECK(nh.precision == doctest::Approx(10.0 / 13.0));
        CHECK(nh.recall == doctest::Approx(10.0 / 12.0));
    }

    TEST_CASE("macro F1") {
        CHECK(macro_f1(std::vector<double>{0.8, 0.6}) == doctest::Approx(0.7));
        CHECK(macro_f1(std::vector<double>{0.42}) == 0.42);
        CHECK(macro_f1(std::vector<double>{0.61, 0.89}) == doctest::Approx(0.75));
        CHECK_THROWS_AS(macro_f1(std::vector<double>{}), PreconditionError);
    }

    TEST_CASE("size-weighted one-vs-one average") {
        const auto r = weighted_average_1v1({{"A", p(0.4, 0.4, 0.4)}, {"B", p(0.5, 0.5, 0.5)}}, {{"A", 6}, {"B", 13}});
        CHECK(r.f1 == doctest::Approx(0.468).epsilon(1e-3));
        const auto same = weighted_average_1v1({{"A", p(0.3, 0.6)}, {"B", p(0.3, 0.6)}}, {{"A", 1}, {"B", 99}});
        CHECK(same.precision == doctest::Approx(0.3));
        const auto equal = weighted_average_1v1({{"A", p(0.2, 0.4)}, {"B", p(0.6, 0.8)}}, {{"A", 5}, {"B", 5}});
        CHECK(equal.precision == doctest::Approx(0.4));
        CHECK(equal.recall == doctest::Approx(0.6));
        CHECK_THROWS_AS(weighted_average_1v1({{"A", p(0.1, 0.1)}}, {{"B", 1}}), PreconditionError);
        CHECK_THROWS_AS(weighted_average_1v1({{"A", p(0.1, 0.1)}}, {{"A", 0}}), PreconditionError);
    }

    TEST_CASE("stability is the population deviation of F1") {
        std::vector<std::pair<std::string, PRF>> runs;
        int i = 0;
        for (double f : {0.60, 0.62, 0.64, 0.58, 0.61}) runs.push_back({std::to_string(i++), {0, 0, f}});
        CHECK(stability_report(runs) == doctest::Approx(0.0200).epsilon(1e-9));
        CHECK(stability_report({{"a", {0, 0, 0.5}}, {"b", {0, 0, 0.5}}}) == 0.0);
        CHECK_THROWS_AS(stability_report({{"a", {0, 0, 0.5}}}), PreconditionError);
    }

    TEST_CASE("streaming and batch confusion agree") {
        RandomStream rng(4);
        std::vector<Label> pred(500), gold(500);
        ConfusionCounts streamed, chunked;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = rng.below(2) ? H : N;
            gold[i] = rng.below(3) ? N : H;
            streamed.add(pred[i], gold[i]);
        }
        for (std::size_t start = 0; start < pred.size(); start += 70) {
            const auto len = std::min<std::size_t>(70, pred.size() - start);
            chunked += confusion(std::span(pred).subspan(start, len), std::span(gold).subspan(start, len));
        }
        const auto batch = confusion(pred, gold);
        CHECK(streamed == batch);
        CHECK(chunked == batch);
        CHECK(prf(streamed) == prf(batch));
        const auto r = prf(batch);
        CHECK(std::abs(r.f1 - 2 * r.precision * r.recall / (r.precision + r.recall)) <= 1e-12);
    }
}

TEST_SUITE("results_grid") {
    TEST_CASE("duplicate keys are rejected") {
        ResultsGrid g;
        g.set({"D", "M", "base", ""}, p(0.5, 0.5));
        CHECK_THROWS(g.set({"D", "M", "base", ""}, p(0.5, 0.5)));
        CHECK_THROWS(g.set_failed({"D", "M", "base", ""}, "x"));
        g.set({"D", "M", "base", "E"}, p(0.5, 0.5));
        CHECK(g.cells().size() == 2);
    }

    TEST_CASE("jsonl round trip keeps cells, failures and metadata") {
        ResultsGrid g;
        g.set({"B", "m1", "base", ""}, p(0.25, 0.75), ConfusionCounts{3, 9, 1, 40});
        g.set({"A", "m1", "gen:10", ""}, p(0.125, 0.5));
        g.set_failed({"A", "m2", "base", ""}, "backend vanished");
        g.metadata.seed = 7;
        g.metadata.seeds = {7, 8};
        g.metadata.levels = {0, 10};
        g.metadata.dataset_sizes = {{"A", 100}, {"B", 50}};
        const auto back = ResultsGrid::from_jsonl(g.to_jsonl());
        CHECK(back.to_jsonl() == g.to_jsonl());
        CHECK(back.find({"B", "m1", "base", ""})->counts == ConfusionCounts{3, 9, 1, 40});
        CHECK(!back.find({"A", "m2", "base", ""})->ok());
        CHECK(back.find({"A", "m2", "base", ""})->error == "backend vanished");
        CHECK(back.metadata.seeds == g.metadata.seeds);
        CHECK(g.select("base").cells().size() == 2);
        CHECK(g.datasets() == std::vector<std::string>{"B", "A"});
    }

    TEST_CASE("summary of identical grids is zero") {
        const auto base = grid_of("base", {{"A", p(0.5, 0.4)}, {"B", p(0.7, 0.9)}});
        const auto same = grid_of("gen:1", {{"A", p(0.5, 0.4)}, {"B", p(0.7, 0.9)}});
        for (const auto& [key, v] : relative_improvement_summary(base, same).percent) CHECK(v == 0.0);
    }

    TEST_CASE("single cell 50 to 60 is plus twenty percent") {
        const auto s = relative_improvement_summary(grid_of("base", {{"A", p(0.5, 0.5)}}),
                                                    grid_of("gl", {{"A", p(0.6, 0.6)}}));
        CHECK(s.percent.at({"M", Metric::precision}) == doctest::Approx(20.0));
        CHECK(s.percent.at({"M", Metric::f1}) == doctest::Approx(20.0));
    }

    TEST_CASE("published recall cells average to the published improvement") {
        const double base_r[] = {65.0, 56.2, 70.6, 53.5, 94.4};
        const double gen_r[] = {63.7, 60.4, 81.8, 87.9, 98.0};
        std::vector<std::pair<std::string, PRF>> b, t;
        for (int i = 0; i < 5; ++i) {
            b.push_back({"D" + std::to_string(i), p(0.5, base_r[i] / 100)});
            t.push_back({"D" + std::to_string(i), p(0.5, gen_r[i] / 100)});
        }
        const auto s = relative_improvement_summary(grid_of("base", b, "BERT"), grid_of("gen:240000", t, "BERT"));
        CHECK(std::round(s.percent.at({"BERT", Metric::recall}) * 10) / 10 == 17.9);
    }

    TEST_CASE("summary ignores dataset order") {
        std::vector<std::pair<std::string, PRF>> b = {{"A", p(0.5, 0.3)}, {"B", p(0.2, 0.6)}, {"C", p(0.9, 0.1)}};
        std::vector<std::pair<std::string, PRF>> t = {{"A", p(0.6, 0.2)}, {"B", p(0.3, 0.7)}, {"C", p(0.8, 0.3)}};
        const auto forward = relative_improvement_summary(grid_of("base", b), grid_of("gl", t));
        std::reverse(b.begin(), b.end());
        std::rotate(t.begin(), t.begin() + 1, t.end());
        const auto shuffled = relative_improvement_summary(grid_of("base", b), grid_of("gl", t));
        for (const auto& [key, v] : forward.percent) CHECK(shuffled.percent.at(key) == doctest::Approx(v).epsilon(1e-12));
    }

    TEST_CASE("zero base values and failed cells are excluded with a reason") {
        auto base = grid_of("base", {{"A", p(0.5, 0.5)}, {"B", {0, 0, 0}}});
        base.set_failed({"C", "M", "base", ""}, "down");
        const auto treated = grid_of("gl", {{"A", p(0.6, 0.6)}, {"B", p(0.3, 0.3)}, {"C", p(0.3, 0.3)}});
        const auto s = relative_improvement_summary(base, treated);
        CHECK(s.percent.at({"M", Metric::f1}) == doctest::Approx(20.0));
        CHECK(s.excluded.size() >= 2);
    }

    TEST_CASE("fixture loader validates F1 against P and R") {
        test::TempDir dir;
        test::write_text(dir / "ok.tsv", "# comment\nFT\tBERT\tbase\t73.0\t65.0\t68.8\n");
        const auto g = load_table_fixture(dir / "ok.tsv");
        CHECK(g.find({"FT", "BERT", "base", ""})->prf->f1 == doctest::Approx(0.688));
        test::write_text(dir / "bad.tsv", "FT\tBERT\tbase\t73.0\t65.0\t70.0\n");
        CHECK_THROWS_AS(load_table_fixture(dir / "bad.tsv"), InputError);
        test::write_text(dir / "short.tsv", "FT\tBERT\tbase\t73.0\n");
        CHECK_THROWS(load_table_fixture(dir / "short.tsv"));
        const auto shipped = load_table_fixture(test::source_dir() / "data" / "fixtures" / "within.tsv");
        CHECK(shipped.cells().size() == 75);
        const auto held_out = load_table_fixture(test::source_dir() / "data" / "fixtures" / "held_out.tsv");
        CHECK(held_out.conditions() == std::vector<std::string>{"4v1", "4v1_gen:240000"});
    }
}
