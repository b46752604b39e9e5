// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

// Writes the planted-lexicon benchmark: two classes drawing on their own
// lexicons plus a shared one, with some cross-class leakage.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "augforge/rng.hpp"

namespace {

using augforge::RandomStream;

struct Options {
    std::size_t train = 200;
    std::size_t test = 500;
    double hate_ratio = 0.10;
    std::size_t hate_lexicon = 60;
    std::size_t nonhate_lexicon = 120;
    std::size_t shared_lexicon = 250;
    double class_rate = 0.3;
    double leak_rate = 0.04;
    double zipf = 1.1;
    std::size_t min_len = 6;
    std::size_t max_len = 18;
    std::uint64_t seed = 20260118;
    std::optional<std::uint64_t> lexicon_seed;
    std::string out = "data/planted";
};

class Zipf {
public:
    Zipf(std::size_t n, double s) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) cumulative_.push_back(total += 1.0 / std::pow(double(i + 1), s));
    }
    std::size_t draw(RandomStream& rng) const {
        const double u = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

std::vector<std::vector<std::string>> make_lexicons(const std::vector<std::size_t>& sizes, RandomStream& rng) {
    static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr",
                                   "st", "tr", "sk", "pl"};
    static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    std::set<std::string> used;
    std::vector<std::vector<std::string>> out;
    for (auto size : sizes) {
        std::vector<std::string> lex;
        while (lex.size() < size) {
            std::string w;
            const auto syllables = 1 + rng.below(3);
            for (std::uint64_t i = 0; i < syllables; ++i) {
                w += onsets[rng.below(std::size(onsets))];
                w += vowels[rng.below(std::size(vowels))];
            }
            if (used.insert(w).second) lex.push_back(w);
        }
        out.push_back(std::move(lex));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Write the planted-lexicon benchmark (train.jsonl, test.jsonl, lexicons.json)"};
    app.add_option("--train", o.train, "gold train size");
    app.add_option("--test", o.test, "test size");
    app.add_option("--hate-ratio", o.hate_ratio, "fraction of hate documents");
    app.add_option("--class-rate", o.class_rate, "probability a token comes from the own-class lexicon");
    app.add_option("--leak-rate", o.leak_rate, "probability a token comes from the other class lexicon");
    app.add_option("--zipf", o.zipf, "Zipf exponent within each lexicon");
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--lexicon-seed", o.lexicon_seed, "separate seed for the lexicons (shared vocabularies across datasets)");
    app.add_option("--out", o.out, "output directory");
    CLI11_PARSE(app, argc, argv);

    RandomStream rng(o.seed);
    RandomStream lexicon_rng(o.lexicon_seed.value_or(0));
    const auto lex = make_lexicons({o.hate_lexicon, o.nonhate_lexicon, o.shared_lexicon},
                                   o.lexicon_seed ? lexicon_rng : rng);
    const Zipf hate_z(lex[0].size(), o.zipf), non_z(lex[1].size(), o.zipf), shared_z(lex[2].size(), o.zipf);

    auto document = [&](bool hate) {
        const auto len = o.min_len + rng.below(o.max_len - o.min_len + 1);
        std::string text;
        for (std::size_t i = 0; i < len; ++i) {
            const double u = rng.uniform();
            const auto& own = hate ? lex[0] : lex[1];
            const auto& other = hate ? lex[1] : lex[0];
            const auto& own_z = hate ? hate_z : non_z;
            const auto& other_z = hate ? non_z : hate_z;
            std::string w;
            if (u < o.class_rate)
                w = own[own_z.draw(rng)];
            else if (u < o.class_rate + o.leak_rate)
                w = other[other_z.draw(rng)];
            else
                w = lex[2][shared_z.draw(rng)];
            if (!text.empty()) text += ' ';
            text += w;
        }
        return text;
    };

    auto write = [&](const std::string& name, std::size_t n) {
        const auto n_hate = static_cast<std::size_t>(std::llround(o.hate_ratio * double(n)));
        std::vector<char> labels(n, 0);
        for (std::size_t i = 0; i < n_hate; ++i) labels[i] = 1;
        rng.shuffle(std::span(labels));
        std::filesystem::create_directories(o.out);
        std::ofstream out(std::filesystem::path(o.out) / name);
        for (const bool hate : labels)
            out << nlohmann::json{{"text", document(hate)}, {"label", hate ? "hate" : "non_hate"}}.dump() << '\n';
        std::cout << name << ": " << n << " documents, " << n_hate << " hate\n";
    };
    write("train.jsonl", o.train);
    write("test.jsonl", o.test);
    std::ofstream(std::filesystem::path(o.out) / "lexicons.json")
        << nlohmann::json{{"hate", lex[0]}, {"non_hate", lex[1]}, {"shared", lex[2]}}.dump(2) << '\n';
    return 0;
}
