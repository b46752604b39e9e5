// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>
#include <set>

#include "augforge/error.hpp"
#include "augforge/generator.hpp"
#include "augforge/hashing.hpp"
#include "augforge/ngram_model.hpp"
#include "augforge/rng.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::generator;

namespace {

Examples class_set(const std::vector<std::string>& texts, Label label) {
    Examples out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(test::example(texts[i], label, "G", i));
    return out;
}

GeneratorSpec spec_for(Label label, int order = 3, double temperature = 1.0) {
    GeneratorSpec s;
    s.dataset_id = "G";
    s.class_label = label;
    s.order = order;
    s.temperature = temperature;
    return s;
}

SyntheticSequence seq(const std::string& text, std::uint64_t index = 0) {
    return {corpus::preprocess(text), "G", Label::hate, 1, index};
}

const std::vector<std::string> kTwoSentences = {"the cat sat on the mat", "a dog ran to the park"};

}  // namespace

TEST_SUITE("generator") {
    TEST_CASE("adapt records the training size") {
        std::vector<std::string> texts;
        for (int i = 0; i < 100; ++i) texts.push_back("hate text " + std::to_string(i % 7));
        const auto h = adapt_generator(class_set(texts, Label::hate), spec_for(Label::hate));
        CHECK(h.training_size == 100);
    }

    TEST_CASE("adapt rejects mixed and empty input") {
        auto mixed = class_set({"a b", "c d"}, Label::hate);
        mixed[1].label = Label::non_hate;
        CHECK_THROWS_AS(adapt_generator(mixed, spec_for(Label::hate)), PreconditionError);
        CHECK_THROWS_AS(adapt_generator({}, spec_for(Label::hate)), PreconditionError);
        CHECK_THROWS_AS(adapt_generator(class_set({"a"}, Label::hate), spec_for(Label::non_hate)), PreconditionError);
    }

    TEST_CASE("spec validation") {
        auto s = spec_for(Label::hate);
        s.order = 0;
        CHECK_THROWS(s.validate());
        s = spec_for(Label::hate);
        s.temperature = 0.0;
        CHECK_THROWS(s.validate());
        s = spec_for(Label::hate);
        s.max_tokens = 0;
        CHECK_THROWS(s.validate());
    }

    TEST_CASE("low-temperature trigram transitions come from the corpus") {
        const auto h = adapt_generator(class_set(kTwoSentences, Label::hate), spec_for(Label::hate, 3, 0.05));
        std::set<std::vector<std::string>> seen;
        for (const auto& s : kTwoSentences) {
            auto t = corpus::preprocess(s);
            t.insert(t.begin(), {"<s>", "<s>"});
            t.push_back("</s>");
            for (std::size_t i = 2; i < t.size(); ++i) seen.insert({t[i - 2], t[i - 1], t[i]});
        }
        for (const auto& s : sample(h, 200, 3)) {
            auto t = s.tokens;
            t.insert(t.begin(), {"<s>", "<s>"});
            if (t.size() - 2 < h.spec.max_tokens) t.push_back("</s>");
            for (std::size_t i = 2; i < t.size(); ++i) CHECK(seen.count({t[i - 2], t[i - 1], t[i]}) == 1);
        }
    }

    TEST_CASE("sample boundaries and lengths") {
        const auto h = adapt_generator(class_set(kTwoSentences, Label::hate), spec_for(Label::hate));
        CHECK(sample(h, 0, 1).empty());
        const auto many = sample(h, 1000, 11);
        REQUIRE(many.size() == 1000);
        for (std::size_t i = 0; i < many.size(); ++i) {
            CHECK(!many[i].tokens.empty());
            CHECK(many[i].tokens.size() <= 30);
            CHECK(many[i].sample_index == i);
            CHECK(many[i].class_label == Label::hate);
        }
    }

    TEST_CASE("sampling is deterministic under a seed") {
        const auto h = adapt_generator(class_set(kTwoSentences, Label::hate), spec_for(Label::hate));
        CHECK(sample(h, 50, 7) == sample(h, 50, 7));
        CHECK(sample(h, 50, 7) != sample(h, 50, 8));
        const auto longer = sample(h, 80, 7);
        const auto shorter = sample(h, 50, 7);
        CHECK(std::equal(shorter.begin(), shorter.end(), longer.begin()));
    }

    TEST_CASE("max_tokens bounds long generations") {
        auto spec = spec_for(Label::hate, 2);
        spec.max_tokens = 4;
        const auto h = adapt_generator(class_set({"a a a a a a a a a a a a"}, Label::hate), spec);
        for (const auto& s : sample(h, 100, 1)) CHECK(s.tokens.size() <= 4);
    }

    TEST_CASE("near-zero temperature is greedy and seed independent") {
        const auto h = adapt_generator(class_set({"b c d", "b c d", "a c e"}, Label::hate),
                                       spec_for(Label::hate, 2, 1e-4));
        const auto x = sample(h, 5, 1);
        const auto y = sample(h, 5, 999);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(x[i].tokens == y[i].tokens);
            CHECK(x[i].tokens == Tokens{"b", "c", "d"});
        }
    }

    TEST_CASE("greedy ties break toward the lexicographically first token") {
        const auto h = adapt_generator(class_set({"zeta", "alpha"}, Label::hate), spec_for(Label::hate, 1, 1e-4));
        CHECK(sample(h, 1, 3).front().tokens.front() == "alpha");
    }

    TEST_CASE("class-conditioned perplexity") {
        const std::vector<std::string> hate = {"foo bar baz", "bar foo qux", "baz qux foo bar"};
        const std::vector<std::string> non = {"one two three", "two one four", "three four one two"};
        for (int order : {1, 2, 3}) {
            const auto m = NgramModel::fit([&] {
                std::vector<Tokens> t;
                for (const auto& s : hate) t.push_back(corpus::preprocess(s));
                return t;
            }(), order, 0.01);
            std::vector<Tokens> own, other;
            for (const auto& s : hate) own.push_back(corpus::preprocess(s));
            for (const auto& s : non) other.push_back(corpus::preprocess(s));
            CHECK(m.perplexity(own) <= m.perplexity(other));
        }
    }

    TEST_CASE("distributions are normalized and strictly positive") {
        const std::vector<Tokens> texts = {{"a", "b", "c"}, {"a", "c", "b", "b"}, {"d"}};
        for (int order : {1, 2, 3, 4}) {
            const auto m = NgramModel::fit(texts, order, 0.01);
            std::vector<NgramModel::Id> ids = {m.begin_id()};
            for (NgramModel::Id i = 0; i <= m.unknown_id(); ++i) ids.push_back(i);
            for (auto a : ids)
                for (auto b : ids) {
                    std::vector<NgramModel::Id> ctx;
                    if (order >= 3) ctx = {a, b};
                    else if (order == 2) ctx = {b};
                    const auto p = m.distribution(ctx);
                    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
                    for (double v : p) CHECK(v > 0.0);
                }
        }
    }

    TEST_CASE("serialized generators sample identically") {
        test::TempDir dir;
        const auto h = adapt_generator(class_set(kTwoSentences, Label::non_hate), spec_for(Label::non_hate));
        save_generator(dir / "g.json", h);
        const auto back = load_generator(dir / "g.json");
        CHECK(sample(back, 40, 5) == sample(h, 40, 5));
        CHECK(serialize_generator(back) == serialize_generator(h));
        CHECK(back.training_size == h.training_size);
        CHECK_THROWS(deserialize_generator("{\"format_version\": 99}"));
    }

    TEST_CASE("sequence files round trip") {
        test::TempDir dir;
        const auto h = adapt_generator(class_set(kTwoSentences, Label::hate), spec_for(Label::hate));
        const auto s = sample(h, 10, 2);
        write_sequences(dir / "s.jsonl", s);
        CHECK(read_sequences(dir / "s.jsonl") == s);
    }

    TEST_CASE("dedupe removes repeats and gold leaks in order") {
        CHECK(dedupe({seq("a b c", 0), seq("a b c", 1), seq("a b d", 2)}, {}) ==
              std::vector{seq("a b c", 0), seq("a b d", 2)});
        CHECK(dedupe({seq("a b c")}, {test::example("a b c", Label::hate)}).empty());

        std::vector<SyntheticSequence> c;
        const char* texts[] = {"x1", "x2", "x1", "x3", "x4", "x2", "gold", "x5", "x6", "x1"};
        for (std::size_t i = 0; i < 10; ++i) c.push_back(seq(texts[i], i));
        const auto out = dedupe(c, {test::example("gold", Label::non_hate)});
        REQUIRE(out.size() == 6);
        const std::vector<std::uint64_t> expected = {0, 1, 3, 4, 7, 8};
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].sample_index == expected[i]);
    }

    TEST_CASE("to_example marks synthetic provenance with a trace") {
        const auto e = to_example(seq("q r", 4));
        CHECK(e.provenance == Provenance::synthetic);
        CHECK(e.label == Label::hate);
        CHECK(!e.confidence.has_value());
        REQUIRE(e.trace.has_value());
        CHECK(e.trace->sample_index == 4);
        CHECK(e.trace->seed == 1);
    }
}

TEST_SUITE("rng") {
    TEST_CASE("derive_seed separates stages and paths") {
        CHECK(derive_seed(1, 2, {3}) == derive_seed(1, 2, {3}));
        CHECK(derive_seed(1, 2, {3}) != derive_seed(1, 2, {4}));
        CHECK(derive_seed(1, 2, {3}) != derive_seed(1, 5, {3}));
        CHECK(derive_seed(1, 2, {3}) != derive_seed(2, 2, {3}));
        CHECK(derive_seed(1, 2, {3, 4}) != derive_seed(1, 2, {4, 3}));
    }

    TEST_CASE("random stream draws are in range and reproducible") {
        RandomStream a(42), b(42);
        for (int i = 0; i < 1000; ++i) {
            const double u = a.uniform();
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
            CHECK(u == b.uniform());
            const auto k = a.below(7);
            CHECK(k < 7);
            CHECK(k == b.below(7));
        }
        std::vector<int> x(20);
        std::iota(x.begin(), x.end(), 0);
        std::vector<int> y(x.begin(), x.end());
        RandomStream(5).shuffle(std::span(x));
        RandomStream(5).shuffle(std::span(y));
        CHECK(x == y);
        std::sort(y.begin(), y.end());
        CHECK(y[19] == 19);
    }

    TEST_CASE("hashing") {
        CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
        CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
