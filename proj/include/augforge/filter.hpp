// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "augforge/classifier.hpp"
#include "augforge/generator.hpp"

namespace augforge::filter {

/// Default confidence cut for hate candidates. Keep rates vary with the
/// generator and classifier and are reported, not enforced.
inline constexpr double kDefaultThreshold = 0.7;

struct FilterConfig {
    double threshold = kDefaultThreshold;
    /// Also filter non-hate candidates, keeping those with
    /// score <= 1 - threshold.
    bool apply_to_nonhate = false;

    void validate() const;
};

struct FilterReport {
    /// Candidates before deduplication; equals candidates when the caller
    /// did not dedupe.
    std::size_t generated = 0;
    std::size_t candidates = 0;
    std::size_t kept = 0;
    /// Absent when there were no candidates.
    std::optional<double> keep_rate;
    double threshold = kDefaultThreshold;
};

struct FilterResult {
    Examples kept;
    FilterReport report;
};

/// Keeps candidates whose classifier confidence reaches the threshold
/// (score >= threshold for hate). Kept examples are synthetic, carry their
/// confidence, and keep the generator's class.
FilterResult filter_candidates(const std::vector<generator::SyntheticSequence>& candidates,
                               const classifier::ConfidenceClassifier& clf, const FilterConfig& cfg);

/// Same rule applied to precomputed scores, order-aligned with candidates.
FilterResult filter_scored(const std::vector<generator::SyntheticSequence>& candidates,
                           std::span<const double> scores, const FilterConfig& cfg);

/// Converts non-hate candidates into synthetic non_hate examples unfiltered.
Examples pass_through_nonhate(const std::vector<generator::SyntheticSequence>& candidates);

}  // namespace augforge::filter
