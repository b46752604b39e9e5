// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/ngram_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "augforge/error.hpp"

namespace augforge::generator {

using nlohmann::json;

NgramModel NgramModel::fit(const std::vector<Tokens>& texts, int order, double add_k) {
    if (order < 1) throw PreconditionError("n-gram order must be at least 1");
    if (!(add_k > 0.0)) throw PreconditionError("add-k smoothing constant must be positive");
    NgramModel m;
    m.order_ = order;
    m.add_k_ = add_k;

    std::set<std::string> vocab;
    for (const auto& t : texts) vocab.insert(t.begin(), t.end());
    m.vocabulary_.assign(vocab.begin(), vocab.end());

    std::vector<std::map<std::vector<Id>, std::map<Id, std::uint32_t>>> raw(static_cast<std::size_t>(order));
    for (const auto& t : texts) {
        std::vector<Id> ids(static_cast<std::size_t>(order - 1), m.begin_id());
        for (const auto& tok : t) ids.push_back(m.lookup(tok));
        ids.push_back(m.end_id());
        for (std::size_t pos = static_cast<std::size_t>(order - 1); pos < ids.size(); ++pos) {
            for (int n = 0; n < order; ++n) {
                std::vector<Id> ctx(ids.begin() + static_cast<long>(pos) - n, ids.begin() + static_cast<long>(pos));
                ++raw[static_cast<std::size_t>(n)][ctx][ids[pos]];
            }
        }
    }
    m.levels_.resize(static_cast<std::size_t>(order));
    for (std::size_t n = 0; n < raw.size(); ++n) {
        for (auto& [ctx, next] : raw[n]) {
            ContextCounts cc;
            for (auto [id, c] : next) {
                cc.next.emplace_back(id, c);
                cc.total += c;
            }
            m.levels_[n].emplace(ctx, std::move(cc));
        }
    }
    return m;
}

NgramModel::Id NgramModel::lookup(const std::string& token) const {
    auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), token);
    if (it == vocabulary_.end() || *it != token) return unknown_id();
    return static_cast<Id>(it - vocabulary_.begin());
}

std::vector<double> NgramModel::distribution(std::span<const Id> context) const {
    const std::size_t outcomes = outcome_count();
    const double k = add_k_;
    // The add-k smoothed unigram is the base; higher orders refine it with
    // Witten-Bell weights and unsmoothed relative frequencies.
    std::vector<double> p(outcomes, 1.0 / static_cast<double>(outcomes));
    for (std::size_t n = 0; n < levels_.size(); ++n) {
        if (context.size() < n) break;
        std::vector<Id> ctx(context.end() - static_cast<long>(n), context.end());
        auto it = levels_[n].find(ctx);
        if (it == levels_[n].end()) continue;
        const ContextCounts& cc = it->second;
        const double total = static_cast<double>(cc.total);
        if (n == 0) {
            const double denom = total + k * static_cast<double>(outcomes);
            std::fill(p.begin(), p.end(), k / denom);
            for (auto [id, c] : cc.next) p[static_cast<std::size_t>(id)] = (static_cast<double>(c) + k) / denom;
            continue;
        }
        const double lambda = total / (total + static_cast<double>(cc.next.size()));
        for (auto& v : p) v *= 1.0 - lambda;
        for (auto [id, c] : cc.next) p[static_cast<std::size_t>(id)] += lambda * static_cast<double>(c) / total;
    }
    return p;
}

double NgramModel::perplexity(const std::vector<Tokens>& texts) const {
    double log_sum = 0.0;
    std::size_t count = 0;
    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    for (const auto& t : texts) {
        std::vector<Id> ids(ctx_len, begin_id());
        for (const auto& tok : t) ids.push_back(lookup(tok));
        ids.push_back(end_id());
        for (std::size_t pos = ctx_len; pos < ids.size(); ++pos) {
            auto dist = distribution(std::span<const Id>(ids.data() + pos - ctx_len, ctx_len));
            log_sum += std::log2(dist[static_cast<std::size_t>(ids[pos])]);
            ++count;
        }
    }
    if (count == 0) return 1.0;
    return std::exp2(-log_sum / static_cast<double>(count));
}

json NgramModel::to_json() const {
    json levels = json::array();
    for (const auto& level : levels_) {
        json entries = json::array();
        for (const auto& [ctx, cc] : level) {
            json next = json::array();
            for (auto [id, c] : cc.next) next.push_back({id, c});
            entries.push_back({ctx, next});
        }
        levels.push_back(std::move(entries));
    }
    return {{"order", order_}, {"add_k", add_k_}, {"vocabulary", vocabulary_}, {"levels", levels}};
}

NgramModel NgramModel::from_json(const json& doc) {
    NgramModel m;
    m.order_ = doc.at("order").get<int>();
    m.add_k_ = doc.at("add_k").get<double>();
    m.vocabulary_ = doc.at("vocabulary").get<std::vector<std::string>>();
    if (!std::is_sorted(m.vocabulary_.begin(), m.vocabulary_.end()))
        throw InputError("n-gram model vocabulary is not sorted");
    for (const auto& entries : doc.at("levels")) {
        std::map<std::vector<Id>, ContextCounts> level;
        for (const auto& e : entries) {
            ContextCounts cc;
            for (const auto& pair : e.at(1)) {
                cc.next.emplace_back(pair.at(0).get<Id>(), pair.at(1).get<std::uint32_t>());
                cc.total += cc.next.back().second;
            }
            level.emplace(e.at(0).get<std::vector<Id>>(), std::move(cc));
        }
        m.levels_.push_back(std::move(level));
    }
    if (m.levels_.size() != static_cast<std::size_t>(m.order_))
        throw InputError("n-gram model level count does not match its order");
    return m;
}

}  // namespace augforge::generator
