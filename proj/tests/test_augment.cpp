// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>

#include "augforge/augment.hpp"
#include "augforge/error.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::augment;

namespace {

Examples synthetic(std::size_t n, Label label, const std::string& source) {
    Examples out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& e = out[i];
        e.id = {source + "/synth", i};
        e.label = label;
        e.source_dataset = source;
        e.provenance = Provenance::synthetic;
    }
    return out;
}

std::map<std::pair<std::string, Label>, std::size_t> synthetic_counts(const Examples& ex) {
    std::map<std::pair<std::string, Label>, std::size_t> out;
    for (const auto& e : ex)
        if (e.provenance == Provenance::synthetic) ++out[{e.source_dataset, e.label}];
    return out;
}

CrossSource source(const std::string& id, std::size_t gold, std::size_t per_class) {
    return {id, test::labeled_set(gold, gold / 4, id), synthetic(per_class, Label::hate, id),
            synthetic(per_class, Label::non_hate, id)};
}

}  // namespace

TEST_SUITE("augment") {
    TEST_CASE("within adds exactly the level") {
        const auto gold = test::labeled_set(4800, 1152, "DV");
        const auto out = assemble_within(gold, synthetic(6000, Label::hate, "DV"), synthetic(6000, Label::non_hate, "DV"),
                                         10000);
        CHECK(out.size() == 14800);
        const auto counts = synthetic_counts(out);
        CHECK(counts.at({"DV", Label::hate}) == 5000);
        CHECK(counts.at({"DV", Label::non_hate}) == 5000);
        CHECK(std::equal(gold.begin(), gold.end(), out.begin()));
    }

    TEST_CASE("level zero is the identity") {
        const auto gold = test::labeled_set(30, 7);
        CHECK(assemble_within(gold, {}, {}, 0) == gold);
    }

    TEST_CASE("odd levels favor hate") {
        CHECK(within_quota(5) == std::pair<std::size_t, std::size_t>{3, 2});
        CHECK(within_quota(240000) == std::pair<std::size_t, std::size_t>{120000, 120000});
    }

    TEST_CASE("largest level draws half per class") {
        const auto out = assemble_within(test::labeled_set(10, 3, "SE"), synthetic(120000, Label::hate, "SE"),
                                         synthetic(130000, Label::non_hate, "SE"), 240000);
        CHECK(out.size() == 240010);
        const auto counts = synthetic_counts(out);
        CHECK(counts.at({"SE", Label::hate}) == 120000);
        CHECK(counts.at({"SE", Label::non_hate}) == 120000);
    }

    TEST_CASE("insufficient supply names the cell") {
        CHECK_THROWS_WITH_AS(assemble_within(test::labeled_set(10, 3, "WS"), synthetic(10, Label::hate, "WS"),
                                             synthetic(100, Label::non_hate, "WS"), 40),
                             doctest::Contains("WS/hate"), SupplyError);
        CHECK_THROWS_AS(assemble_cross_pool({source("A", 8, 1), source("B", 8, 100)}, 40), SupplyError);
    }

    TEST_CASE("gold pool adds every other train set") {
        const auto target = test::labeled_set(40, 10, "T");
        const auto out = assemble_gold_pool("T", target, {{"U", test::labeled_set(25, 5, "U")},
                                                          {"V", test::labeled_set(35, 5, "V")}});
        CHECK(out.size() == 100);
        for (const auto& e : out) CHECK(e.provenance == Provenance::gold);
        CHECK_THROWS_AS(assemble_gold_pool("T", target, {{"T", target}}), PreconditionError);
    }

    TEST_CASE("cross pool splits the level evenly across sources and classes") {
        std::vector<CrossSource> sources;
        for (const char* id : {"DV", "SE", "SF", "WS"}) sources.push_back(source(id, 20, 30000));
        const auto out = assemble_cross_pool(sources, 240000, "FT");
        CHECK(out.size() == 80 + 240000);
        const auto counts = synthetic_counts(out);
        REQUIRE(counts.size() == 8);
        for (const auto& [cell, n] : counts) CHECK(n == 30000);
    }

    TEST_CASE("cross remainders go to cells in id order, hate first") {
        const auto q = cross_quotas({"C", "A", "B"}, 15);
        CHECK(q.at({"A", Label::hate}) == 3);
        CHECK(q.at({"A", Label::non_hate}) == 3);
        CHECK(q.at({"B", Label::hate}) == 3);
        CHECK(q.at({"B", Label::non_hate}) == 2);
        CHECK(q.at({"C", Label::hate}) == 2);
        CHECK(q.at({"C", Label::non_hate}) == 2);
        std::size_t total = 0;
        for (const auto& [_, n] : q) total += n;
        CHECK(total == 15);
        CHECK(cross_quotas({}, 10).empty());
    }

    TEST_CASE("cross pool rejects the target and duplicate sources") {
        CHECK_THROWS_AS(assemble_cross_pool({source("A", 8, 5), source("B", 8, 5)}, 4, "A"), PreconditionError);
        CHECK_THROWS_AS(assemble_cross_pool({source("A", 8, 5), source("A", 8, 5)}, 4), PreconditionError);
        const auto gold_only = assemble_cross_pool({source("A", 8, 0), source("B", 12, 0)}, 0, "C");
        CHECK(gold_only.size() == 20);
    }

    TEST_CASE("plan validation and labels") {
        AugmentationPlan p;
        p.target_dataset = "DV";
        CHECK(p.label() == "base");
        p.level = 5;
        CHECK_THROWS(p.validate());
        p.condition = Condition::gen;
        p.level = 2000;
        CHECK(p.label() == "gen:2000");
        p.condition = Condition::gold_pool;
        p.level = 0;
        CHECK(p.label() == "gl");
        p.condition = Condition::cross_4v1_gen;
        p.level = 240000;
        p.source_datasets = {"FT", "WS"};
        CHECK(p.label() == "4v1_gen:240000");
        p.source_datasets.push_back("DV");
        CHECK_THROWS(p.validate());
        CHECK(parse_condition(to_string(Condition::cross_4v1)) == Condition::cross_4v1);
        CHECK_THROWS(parse_condition("nope"));
    }

    TEST_CASE("confidence ranking is stable and puts unscored last") {
        auto pool = synthetic(5, Label::hate, "R");
        pool[0].confidence = 0.8;
        pool[1].confidence = 0.95;
        pool[3].confidence = 0.8;
        pool[4].confidence = 0.99;
        const auto ranked = rank_synthetic(pool, SelectionRule::confidence_desc, 1);
        std::vector<std::uint64_t> order;
        for (const auto& e : ranked) order.push_back(e.id.index);
        CHECK(order == std::vector<std::uint64_t>{4, 1, 0, 3, 2});
        const auto a = rank_synthetic(pool, SelectionRule::seeded_random, 3);
        CHECK(a == rank_synthetic(pool, SelectionRule::seeded_random, 3));
        CHECK(a.size() == pool.size());
    }
}
