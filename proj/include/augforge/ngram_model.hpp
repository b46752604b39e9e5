// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "augforge/types.hpp"

namespace augforge::generator {

/// Interpolated n-gram language model over whitespace tokens.
///
/// Outcomes are the sorted training vocabulary followed by an end marker and
/// an unknown-token slot. The unigram base is add-k smoothed,
///
///     p_1(w) = (c(w) + k) / (N + k |Y|),
///
/// and higher orders refine it with Witten-Bell weights,
///
///     p(w | h) = l(h) c(h, w) / c(h) + (1 - l(h)) p(w | h'),   l(h) = c(h) / (c(h) + T(h)),
///
/// where h' drops the oldest context token and T(h) counts distinct
/// continuations. Contexts never observed defer entirely to the lower order.
class NgramModel {
public:
    using Id = std::int32_t;

    static NgramModel fit(const std::vector<Tokens>& texts, int order, double add_k);

    int order() const { return order_; }
    double add_k() const { return add_k_; }
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

    Id end_id() const { return static_cast<Id>(vocabulary_.size()); }
    Id unknown_id() const { return end_id() + 1; }
    Id begin_id() const { return end_id() + 2; }
    std::size_t outcome_count() const { return vocabulary_.size() + 2; }

    /// Vocabulary id of token, or unknown_id().
    Id lookup(const std::string& token) const;

    /// Full distribution over outcomes given the last order()-1 ids
    /// (begin-padded). The entries sum to one.
    std::vector<double> distribution(std::span<const Id> context) const;

    /// Per-token perplexity of texts, end markers included.
    double perplexity(const std::vector<Tokens>& texts) const;

    nlohmann::json to_json() const;
    static NgramModel from_json(const nlohmann::json& doc);

    bool operator==(const NgramModel&) const = default;

private:
    struct ContextCounts {
        std::vector<std::pair<Id, std::uint32_t>> next;  // sorted by id
        std::uint64_t total = 0;
        bool operator==(const ContextCounts&) const = default;
    };

    int order_ = 3;
    double add_k_ = 0.01;
    std::vector<std::string> vocabulary_;
    // levels_[n] maps contexts of length n to continuation counts.
    std::vector<std::map<std::vector<Id>, ContextCounts>> levels_;
};

}  // namespace augforge::generator
