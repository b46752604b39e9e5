// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "augforge/analysis.hpp"
#include "augforge/error.hpp"
#include "augforge/rng.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::analysis;

namespace {

/// Reference PMI: recounts every term by scanning the whole corpus per term.
std::vector<PmiEntry> brute_force_pmi(const Examples& corpus, Label target, std::size_t min_count, double k) {
    std::set<std::string> vocab;
    std::size_t class_tokens = 0, total_tokens = 0;
    for (const auto& e : corpus)
        for (const auto& t : e.tokens) {
            vocab.insert(t);
            ++total_tokens;
            class_tokens += e.label == target;
        }
    const double v = double(vocab.size());
    std::vector<PmiEntry> out;
    for (const auto& term : vocab) {
        std::size_t in_class = 0, total = 0;
        for (const auto& e : corpus)
            for (const auto& t : e.tokens)
                if (t == term) {
                    ++total;
                    in_class += e.label == target;
                }
        if (total < min_count) continue;
        const double p_w_c = (double(in_class) + k) / (double(class_tokens) + k * v);
        const double p_w = (double(total) + k) / (double(total_tokens) + k * v);
        out.push_back({term, std::log2(p_w_c / p_w), in_class, total});
    }
    std::sort(out.begin(), out.end(),
              [](const PmiEntry& a, const PmiEntry& b) { return a.pmi != b.pmi ? a.pmi > b.pmi : a.term < b.term; });
    return out;
}

Examples docs(const std::vector<std::string>& texts, Label label, const std::string& source = "A") {
    Examples out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(test::example(texts[i], label, source, i));
    return out;
}

Examples concat(Examples a, const Examples& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

/// Twenty documents over a shared vocabulary; the hate half also carries
/// "plantedslur".
Examples toy_corpus(std::uint64_t seed) {
    RandomStream rng(seed);
    const char* shared[] = {"people", "they", "the", "go", "home", "now", "city", "talk"};
    Examples out;
    for (std::size_t i = 0; i < 20; ++i) {
        const bool hate = i % 2 == 0;
        std::string text;
        for (int w = 0; w < 6; ++w) text += std::string(shared[rng.below(8)]) + " ";
        if (hate) text += "plantedslur";
        out.push_back(test::example(text, hate ? Label::hate : Label::non_hate, "toy", i));
    }
    return out;
}

}  // namespace

TEST_SUITE("analysis") {
    TEST_CASE("hand-computed PMI of one") {
        // x: 5 of 10 hate tokens and 5 of 20 tokens overall.
        const auto corpus = concat(docs({"x x x x x y y y y y"}, Label::hate),
                                   docs({"z z z z z z z z z z"}, Label::non_hate));
        const auto table = pmi_table(corpus, Label::hate, 1, 0.0);
        const auto it = std::find_if(table.begin(), table.end(), [](const PmiEntry& e) { return e.term == "x"; });
        REQUIRE(it != table.end());
        CHECK(it->pmi == doctest::Approx(1.0));
        CHECK(it->count_in_class == 5);
        CHECK(it->count_total == 5);
    }

    TEST_CASE("a term spread evenly across classes has zero PMI") {
        const auto corpus = concat(docs({"u a", "u b"}, Label::hate), docs({"u c", "u d"}, Label::non_hate));
        const auto table = pmi_table(corpus, Label::hate, 1, 0.0);
        const auto it = std::find_if(table.begin(), table.end(), [](const PmiEntry& e) { return e.term == "u"; });
        REQUIRE(it != table.end());
        CHECK(std::abs(it->pmi) < 1e-12);
    }

    TEST_CASE("planted hate term ranks first and matches brute force") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto corpus = toy_corpus(seed);
            const auto table = pmi_table(corpus, Label::hate);
            REQUIRE(!table.empty());
            CHECK(table.front().term == "plantedslur");
            CHECK(table == brute_force_pmi(corpus, Label::hate, kDefaultMinCount, kDefaultSmoothingK));
            CHECK(pmi_table(corpus, Label::non_hate, 1, 0.0) == brute_force_pmi(corpus, Label::non_hate, 1, 0.0));
        }
    }

    TEST_CASE("class conditionals marginalize to the overall distribution") {
        const auto corpus = toy_corpus(9);
        const auto hate = pmi_table(corpus, Label::hate, 1, 0.0);
        std::size_t total = 0, hate_tokens = 0;
        for (const auto& e : corpus) {
            total += e.tokens.size();
            if (e.label == Label::hate) hate_tokens += e.tokens.size();
        }
        const double p_hate = double(hate_tokens) / double(total);
        for (const auto& e : hate) {
            const double p_w = double(e.count_total) / double(total);
            const double p_w_hate = double(e.count_in_class) / double(hate_tokens);
            const double p_w_non = double(e.count_total - e.count_in_class) / double(total - hate_tokens);
            CHECK(std::abs(p_w_hate * p_hate + p_w_non * (1 - p_hate) - p_w) <= 1e-9);
        }
    }

    TEST_CASE("min_count filters rare terms and ties break by term") {
        const auto corpus = concat(docs({"b a", "a b"}, Label::hate), docs({"c", "c c"}, Label::non_hate));
        const auto table = pmi_table(corpus, Label::hate, 2, 0.5);
        REQUIRE(table.size() == 3);
        CHECK(table[0].term == "a");
        CHECK(table[1].term == "b");
        CHECK(pmi_table(corpus, Label::hate, 3, 0.5).size() == 1);
        CHECK_THROWS_AS(pmi_table(docs({"a"}, Label::non_hate), Label::hate), PreconditionError);
        CHECK_THROWS_AS(pmi_table(corpus, Label::hate, 0), PreconditionError);
        CHECK(to_tsv(table).rfind("term\t", 0) == 0);
    }

    TEST_CASE("novel terms surface terms absent from gold") {
        Examples synthetic;
        for (int i = 0; i < 12; ++i) synthetic.push_back(test::example("ghetto people", Label::hate, "s", i));
        const auto gold = concat(docs({"people are here", "people again"}, Label::hate, "g"),
                                 docs({"calm day", "nice people"}, Label::non_hate, "g"));
        const auto novel = novel_terms(synthetic, gold, Label::hate, 10);
        CHECK(std::find(novel.begin(), novel.end(), TermCount{"ghetto", 12}) != novel.end());
        CHECK(std::none_of(novel.begin(), novel.end(), [](const TermCount& t) { return t.term == "people"; }));
    }

    TEST_CASE("exactly the planted novel terms") {
        const auto gold = concat(docs({"we hate them", "them over there", "we talk"}, Label::hate, "g"),
                                 docs({"lovely weather", "we talk more", "over there"}, Label::non_hate, "g"));
        Examples synthetic = docs({"we hate them vermin", "them barbarians over there", "infest them we",
                                   "vermin barbarians infest"},
                                  Label::hate, "s");
        auto novel = novel_terms(synthetic, gold, Label::hate, 20);
        std::set<std::string> terms;
        for (const auto& t : novel) terms.insert(t.term);
        CHECK(terms == std::set<std::string>{"barbarians", "infest", "vermin"});
        CHECK(novel_terms(docs({"we hate them"}, Label::hate, "s"), gold, Label::hate, 20).empty());
        CHECK_THROWS_AS(novel_terms(synthetic, gold, Label::hate, 0), PreconditionError);
    }

    TEST_CASE("frequency lift counts exactly") {
        Examples gold = docs({"slur x", "slur y"}, Label::hate, "g");
        Examples synthetic;
        for (int i = 0; i < 20; ++i) synthetic.push_back(test::example("slur slur", Label::hate, "s", i));
        const auto lift = frequency_lift(synthetic, gold, {"slur", "absent"});
        CHECK(lift == std::vector<TermLift>{{"slur", 2, 40}, {"absent", 0, 0}});
        CHECK(frequency_lift(synthetic, gold, {}).empty());
    }
}
