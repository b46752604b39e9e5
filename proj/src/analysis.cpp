// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <unordered_map>

#include "augforge/corpus.hpp"
#include "augforge/error.hpp"

namespace augforge::analysis {

namespace {

struct Counts {
    std::map<std::string, std::pair<std::size_t, std::size_t>> terms;  // (in class, total)
    std::size_t class_tokens = 0;
    std::size_t total_tokens = 0;
};

Tokens tokens_of(const LabeledExample& e) {
    return e.tokens.empty() && !e.text.empty() ? corpus::preprocess(e.text) : e.tokens;
}

Counts count(const Examples& corpus, Label target) {
    Counts c;
    for (const auto& e : corpus) {
        const bool in_class = e.label == target;
        for (const auto& t : tokens_of(e)) {
            auto& [cls, tot] = c.terms[t];
            ++tot;
            ++c.total_tokens;
            if (in_class) {
                ++cls;
                ++c.class_tokens;
            }
        }
    }
    return c;
}

std::unordered_map<std::string, std::size_t> term_counts(const Examples& corpus) {
    std::unordered_map<std::string, std::size_t> out;
    for (const auto& e : corpus)
        for (const auto& t : tokens_of(e)) ++out[t];
    return out;
}

}  // namespace

std::vector<PmiEntry> pmi_table(const Examples& corpus, Label target_class, std::size_t min_count,
                                double smoothing_k) {
    if (min_count < 1) throw PreconditionError("pmi_table: min_count must be at least 1");
    if (!(smoothing_k >= 0.0)) throw PreconditionError("pmi_table: smoothing_k must be non-negative");
    const Counts c = count(corpus, target_class);
    if (c.class_tokens == 0)
        throw PreconditionError("pmi_table: no " + std::string(to_string(target_class)) + " tokens in corpus");

    const double k = smoothing_k;
    const double vocab = static_cast<double>(c.terms.size());
    const double class_denominator = static_cast<double>(c.class_tokens) + k * vocab;
    const double total_denominator = static_cast<double>(c.total_tokens) + k * vocab;

    std::vector<PmiEntry> out;
    for (const auto& [term, n] : c.terms) {
        if (n.second < min_count) continue;
        const double p_w_c = (static_cast<double>(n.first) + k) / class_denominator;
        const double p_w = (static_cast<double>(n.second) + k) / total_denominator;
        // A class-absent term under k = 0 has p(w|c) = 0 and PMI -inf.
        out.push_back({term, std::log2(p_w_c / p_w), n.first, n.second});
    }
    std::sort(out.begin(), out.end(), [](const PmiEntry& a, const PmiEntry& b) {
        if (a.pmi != b.pmi) return a.pmi > b.pmi;
        return a.term < b.term;
    });
    return out;
}

std::vector<TermCount> novel_terms(const Examples& synthetic, const Examples& gold, Label target_class,
                                   std::size_t top_n, std::size_t min_count, double smoothing_k) {
    if (top_n < 1) throw PreconditionError("novel_terms: top_n must be at least 1");
    Examples combined = synthetic;
    combined.insert(combined.end(), gold.begin(), gold.end());
    if (count_label(combined, target_class) == 0) return {};

    const auto gold_counts = term_counts(gold);
    const auto synthetic_counts = term_counts(synthetic);
    const auto table = pmi_table(combined, target_class, min_count, smoothing_k);

    std::vector<TermCount> out;
    for (std::size_t i = 0; i < table.size() && i < top_n; ++i) {
        const auto& entry = table[i];
        if (entry.pmi <= 0.0 || gold_counts.count(entry.term)) continue;
        auto it = synthetic_counts.find(entry.term);
        out.push_back({entry.term, it == synthetic_counts.end() ? 0 : it->second});
    }
    return out;
}

std::vector<TermLift> frequency_lift(const Examples& synthetic, const Examples& gold,
                                     const std::vector<std::string>& terms) {
    const auto g = term_counts(gold);
    const auto s = term_counts(synthetic);
    std::vector<TermLift> out;
    out.reserve(terms.size());
    for (const auto& term : terms) {
        auto gi = g.find(term);
        auto si = s.find(term);
        out.push_back({term, gi == g.end() ? 0 : gi->second, si == s.end() ? 0 : si->second});
    }
    return out;
}

std::string to_tsv(const std::vector<PmiEntry>& table) {
    std::string out = "term\tpmi\tcount_in_class\tcount_total\n";
    for (const auto& e : table) out += fmt::format("{}\t{:.6f}\t{}\t{}\n", e.term, e.pmi, e.count_in_class, e.count_total);
    return out;
}

std::string to_tsv(const std::vector<TermCount>& terms) {
    std::string out = "term\tsynthetic_count\n";
    for (const auto& t : terms) out += fmt::format("{}\t{}\n", t.term, t.count);
    return out;
}

std::string to_tsv(const std::vector<TermLift>& lifts) {
    std::string out = "term\tgold_count\tsynthetic_count\n";
    for (const auto& l : lifts) out += fmt::format("{}\t{}\t{}\n", l.term, l.gold_count, l.synthetic_count);
    return out;
}

}  // namespace augforge::analysis
