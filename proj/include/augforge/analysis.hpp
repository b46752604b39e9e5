// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "augforge/types.hpp"

namespace augforge::analysis {

inline constexpr double kDefaultSmoothingK = 0.5;
inline constexpr std::size_t kDefaultMinCount = 3;

struct PmiEntry {
    std::string term;
    double pmi = 0.0;
    std::size_t count_in_class = 0;
    std::size_t count_total = 0;

    bool operator==(const PmiEntry&) const = default;
};

/// log2(p(w|c) / p(w)) with add-k smoothing over the corpus vocabulary.
/// Terms seen fewer than min_count times are left out. Ranked by PMI
/// descending, then term ascending.
std::vector<PmiEntry> pmi_table(const Examples& corpus, Label target_class,
                                std::size_t min_count = kDefaultMinCount,
                                double smoothing_k = kDefaultSmoothingK);

struct TermCount {
    std::string term;
    std::size_t count = 0;

    bool operator==(const TermCount&) const = default;
};

/// Positive-PMI terms among the top_n target-class terms of the combined
/// synthetic and gold corpus that never occur in gold.
std::vector<TermCount> novel_terms(const Examples& synthetic, const Examples& gold, Label target_class,
                                   std::size_t top_n, std::size_t min_count = 1,
                                   double smoothing_k = kDefaultSmoothingK);

struct TermLift {
    std::string term;
    std::size_t gold_count = 0;
    std::size_t synthetic_count = 0;

    bool operator==(const TermLift&) const = default;
};

std::vector<TermLift> frequency_lift(const Examples& synthetic, const Examples& gold,
                                     const std::vector<std::string>& terms);

/// Tab-separated with a header row.
std::string to_tsv(const std::vector<PmiEntry>& table);
std::string to_tsv(const std::vector<TermCount>& terms);
std::string to_tsv(const std::vector<TermLift>& lifts);

}  // namespace augforge::analysis
