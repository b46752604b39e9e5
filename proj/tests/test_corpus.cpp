// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "augforge/corpus.hpp"
#include "augforge/error.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::corpus;
using augforge::test::TempDir;

namespace {

DatasetCatalogEntry abc_entry() {
    return {"AB", 0.01, 0.5, {{"a", LabelTarget::hate}, {"b", LabelTarget::non_hate}, {"c", LabelTarget::discard}}};
}

std::multiset<ExampleId> ids(const Examples& ex) {
    std::multiset<ExampleId> out;
    for (const auto& e : ex) out.insert(e.id);
    return out;
}

}  // namespace

TEST_SUITE("corpus") {
    TEST_CASE("preprocess lowercases and strips urls") {
        CHECK(preprocess("I DETEST them http://x.co") == Tokens{"i", "detest", "them"});
    }

    TEST_CASE("preprocess of empty input") { CHECK(preprocess("").empty()); }

    TEST_CASE("preprocess drops mentions and emoji") {
        CHECK(preprocess("@someone hello \xF0\x9F\x98\x80 world https://a.b/c www.x.org") ==
              Tokens{"hello", "world"});
        CHECK(preprocess("ok\xE2\x9D\xA4yes") == Tokens{"ok", "yes"});
    }

    TEST_CASE("preprocess truncates keeping the prefix") {
        std::string text;
        for (int i = 0; i < 40; ++i) text += "w" + std::to_string(i) + " ";
        const auto t = preprocess(text, 30);
        REQUIRE(t.size() == 30);
        for (int i = 0; i < 30; ++i) CHECK(t[static_cast<std::size_t>(i)] == "w" + std::to_string(i));
    }

    TEST_CASE("preprocess keeps non-ascii letters untouched") {
        CHECK(preprocess("\xC3\x89T\xC3\x89 Caf\xC3\xA9") == Tokens{"\xC3\x89t\xC3\x89", "caf\xC3\xA9"});
    }

    TEST_CASE("preprocess is idempotent under whitespace join") {
        for (const char* s : {"A  b\tC http://u @m", "x\xF0\x9F\x98\x80y z", "  ", "MiXeD CaSe, punct!"}) {
            const auto once = preprocess(s);
            CHECK(preprocess(join_tokens(once)) == once);
        }
    }

    TEST_CASE("preprocess rejects zero max_tokens") { CHECK_THROWS_AS(preprocess("a", 0), PreconditionError); }

    TEST_CASE("ingest maps labels and drops discards") {
        TempDir dir;
        std::string text;
        const char* labels = "aaaabbbbcc";
        for (int i = 0; i < 10; ++i)
            text += "{\"text\":\"line " + std::to_string(i) + "\",\"label\":\"" + labels[i] + "\"}\n";
        test::write_text(dir / "ab.jsonl", text);
        const auto r = ingest_dataset(dir / "ab.jsonl", abc_entry());
        CHECK(r.examples.size() == 8);
        CHECK(r.stats.discarded == 2);
        CHECK(r.stats.hate_ratio == doctest::Approx(0.5));
        for (const auto& e : r.examples) {
            CHECK((e.label == Label::hate || e.label == Label::non_hate));
            CHECK(e.provenance == Provenance::gold);
            CHECK(e.source_dataset == "AB");
        }
    }

    TEST_CASE("ingest of a DV-style file keeps hate and neither") {
        TempDir dir;
        test::write_text(dir / "dv.csv",
                         "text,label\nfirst,hate\n\"second, quoted\",offensive\nthird,neither\nfourth,offensive\n");
        const auto r = ingest_dataset(dir / "dv.csv", DatasetCatalog::defaults().at("DV"));
        REQUIRE(r.examples.size() == 2);
        CHECK(r.examples[0].label == Label::hate);
        CHECK(r.examples[1].label == Label::non_hate);
        CHECK(r.examples[1].text == "third");
    }

    TEST_CASE("ingest errors") {
        TempDir dir;
        test::write_text(dir / "empty.jsonl", "");
        CHECK_THROWS_AS(ingest_dataset(dir / "empty.jsonl", abc_entry()), InputError);
        test::write_text(dir / "unknown.jsonl", "{\"text\":\"x\",\"label\":\"zzz\"}\n");
        CHECK_THROWS_WITH_AS(ingest_dataset(dir / "unknown.jsonl", abc_entry()), doctest::Contains("zzz"),
                             InputError);
        test::write_text(dir / "alldiscard.jsonl", "{\"text\":\"x\",\"label\":\"c\"}\n");
        CHECK_THROWS_AS(ingest_dataset(dir / "alldiscard.jsonl", abc_entry()), InputError);
        CHECK_THROWS_AS(ingest_dataset(dir / "missing.jsonl", abc_entry()), InputError);
    }

    TEST_CASE("ingest retains duplicates with distinct ids") {
        TempDir dir;
        test::write_text(dir / "d.tsv", "label\ttext\na\tsame\na\tsame\nb\tother\n");
        const auto r = ingest_dataset(dir / "d.tsv", abc_entry());
        CHECK(r.examples.size() == 3);
        CHECK(r.stats.duplicates == 1);
        CHECK(r.examples[0].id != r.examples[1].id);
    }

    TEST_CASE("default catalog") {
        const auto c = DatasetCatalog::defaults();
        const std::vector<std::tuple<std::string, double, double>> expected = {
            {"DV", 6.0, 0.24}, {"FT", 53.0, 0.11}, {"WS", 13.0, 0.15}, {"SF", 9.6, 0.11}, {"SE", 10.0, 0.40}};
        REQUIRE(c.entries().size() == 5);
        for (const auto& [id, size, ratio] : expected) {
            CHECK(c.at(id).expected_size_k == size);
            CHECK(c.at(id).expected_hate_ratio == ratio);
        }
        const auto shipped = DatasetCatalog::load(test::source_dir() / "data" / "catalog.json");
        CHECK(shipped.to_json() == c.to_json());
        CHECK(DatasetCatalog::from_json(c.to_json()).to_json() == c.to_json());
    }

    TEST_CASE("stratified split of 100 with 24 hate") {
        const auto ex = test::labeled_set(100, 24);
        const auto s = stratified_split(ex, 0.8, 5);
        CHECK(s.train.size() == 80);
        const auto h = count_label(s.train, Label::hate);
        CHECK((h == 19 || h == 20));
        CHECK(s.test.size() == 20);
        auto all = ids(s.train);
        for (const auto& id : ids(s.test)) all.insert(id);
        CHECK(all == ids(ex));
    }

    TEST_CASE("stratified split boundaries and determinism") {
        const auto ex = test::labeled_set(37, 9);
        const auto full = stratified_split(ex, 1.0, 1);
        CHECK(full.train.size() == 37);
        CHECK(full.test.empty());
        CHECK(stratified_split(ex, 0.7, 3).train == stratified_split(ex, 0.7, 3).train);
        CHECK(stratified_split(ex, 0.7, 3).train != stratified_split(ex, 0.7, 4).train);
        CHECK_THROWS_AS(stratified_split(test::labeled_set(10, 0), 0.8, 1), PreconditionError);
    }

    TEST_CASE("stratified split invariants over many shapes") {
        for (std::size_t n : {std::size_t{7}, std::size_t{20}, std::size_t{53}, std::size_t{101}})
            for (std::size_t hate : {std::size_t{1}, std::size_t{3}, n / 2})
                for (double ratio : {0.5, 0.8, 0.9})
                    for (std::uint64_t seed : {1u, 2u}) {
                        const auto ex = test::labeled_set(n, hate);
                        const auto s = stratified_split(ex, ratio, seed);
                        auto all = ids(s.train);
                        for (const auto& id : ids(s.test)) all.insert(id);
                        CHECK(all == ids(ex));
                        CHECK(s.train.size() + s.test.size() == n);
                        const double expected_train_hate = ratio * double(hate);
                        CHECK(std::abs(double(count_label(s.train, Label::hate)) - expected_train_hate) <= 1.0);
                        const double expected_test_hate = (1 - ratio) * double(hate);
                        CHECK(std::abs(double(count_label(s.test, Label::hate)) - expected_test_hate) <= 1.0);
                        CHECK(std::abs(double(s.train.size()) / double(n) - ratio) <= 1.0 / double(n));
                    }
    }

    TEST_CASE("kfold over 50 with 10 hate") {
        const auto ex = test::labeled_set(50, 10);
        const auto folds = kfold_splits(ex, 5, 9);
        REQUIRE(folds.size() == 5);
        std::multiset<ExampleId> all;
        for (const auto& f : folds) {
            CHECK(f.test.size() == 10);
            CHECK(count_label(f.test, Label::hate) == 2);
            CHECK(f.train.size() == 40);
            for (const auto& id : ids(f.test)) all.insert(id);
        }
        CHECK(all == ids(ex));
    }

    TEST_CASE("kfold uneven sizes stay within one per class") {
        const auto ex = test::labeled_set(53, 12);
        const auto folds = kfold_splits(ex, 5, 2);
        for (const auto& f : folds) {
            const auto h = count_label(f.test, Label::hate);
            CHECK((h == 2 || h == 3));
            const auto nh = f.test.size() - h;
            CHECK((nh == 8 || nh == 9));
        }
        CHECK_THROWS_AS(kfold_splits(test::labeled_set(20, 3), 5, 1), PreconditionError);
        CHECK_THROWS_AS(kfold_splits(ex, 1, 1), PreconditionError);
    }

    TEST_CASE("example line round trip") {
        auto e = test::example("Hello there", Label::hate, "X", 4);
        e.provenance = Provenance::synthetic;
        e.confidence = 0.875;
        e.trace = GeneratorTrace{"X", Label::hate, 11, 3};
        CHECK(from_json_line(to_json_line(e)) == e);
        TempDir dir;
        write_examples(dir / "e.jsonl", {e, test::example("b", Label::non_hate)});
        CHECK(read_examples(dir / "e.jsonl").front() == e);
    }
}
