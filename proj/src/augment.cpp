// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/augment.hpp"

#include <algorithm>
#include <numeric>
#include <span>

#include "augforge/error.hpp"
#include "augforge/rng.hpp"

namespace augforge::augment {

std::string_view to_string(Condition condition) {
    switch (condition) {
        case Condition::base: return "base";
        case Condition::gen: return "gen";
        case Condition::gold_pool: return "gold_pool";
        case Condition::cross_4v1: return "cross_4v1";
        case Condition::cross_4v1_gen: return "cross_4v1_gen";
    }
    return "base";
}

Condition parse_condition(std::string_view text) {
    for (auto c : {Condition::base, Condition::gen, Condition::gold_pool, Condition::cross_4v1,
                   Condition::cross_4v1_gen})
        if (to_string(c) == text) return c;
    throw InputError("unknown augmentation condition '" + std::string(text) + "'");
}

bool involves_generation(Condition condition) {
    return condition == Condition::gen || condition == Condition::cross_4v1_gen;
}

bool is_cross(Condition condition) {
    return condition == Condition::cross_4v1 || condition == Condition::cross_4v1_gen;
}

void AugmentationPlan::validate() const {
    if (level > 0 && !involves_generation(condition))
        throw PreconditionError("condition " + std::string(to_string(condition)) + " takes no synthetic level");
    if (involves_generation(condition) && level == 0)
        throw PreconditionError("condition " + std::string(to_string(condition)) + " needs a positive level");
    if (is_cross(condition) &&
        std::find(source_datasets.begin(), source_datasets.end(), target_dataset) != source_datasets.end())
        throw PreconditionError("cross condition lists its target " + target_dataset + " among its sources");
}

std::string AugmentationPlan::label() const {
    switch (condition) {
        case Condition::base: return "base";
        case Condition::gen: return "gen:" + std::to_string(level);
        case Condition::gold_pool: return "gl";
        case Condition::cross_4v1: return "4v1";
        case Condition::cross_4v1_gen: return "4v1_gen:" + std::to_string(level);
    }
    return "base";
}

std::string_view to_string(SelectionRule rule) {
    return rule == SelectionRule::confidence_desc ? "confidence_desc" : "seeded_random";
}

SelectionRule parse_selection_rule(std::string_view text) {
    if (text == "confidence_desc") return SelectionRule::confidence_desc;
    if (text == "seeded_random") return SelectionRule::seeded_random;
    throw InputError("unknown selection rule '" + std::string(text) + "'");
}

Examples rank_synthetic(Examples pool, SelectionRule rule, std::uint64_t seed) {
    if (rule == SelectionRule::seeded_random) {
        RandomStream rng(seed);
        rng.shuffle(std::span(pool));
        return pool;
    }
    std::stable_sort(pool.begin(), pool.end(), [](const LabeledExample& a, const LabeledExample& b) {
        if (a.confidence.has_value() != b.confidence.has_value()) return a.confidence.has_value();
        return a.confidence.value_or(0.0) > b.confidence.value_or(0.0);
    });
    return pool;
}

std::pair<std::size_t, std::size_t> within_quota(std::size_t level) { return {(level + 1) / 2, level / 2}; }

namespace {

void append_prefix(Examples& out, const Examples& pool, std::size_t count, const std::string& cell) {
    if (pool.size() < count) throw SupplyError(cell, count, pool.size());
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<long>(count));
}

}  // namespace

Examples assemble_within(const Examples& gold_train, const Examples& synth_hate, const Examples& synth_nonhate,
                         std::size_t level) {
    const auto [hate_quota, non_hate_quota] = within_quota(level);
    const std::string dataset = gold_train.empty() ? std::string("target") : gold_train.front().source_dataset;
    if (synth_hate.size() < hate_quota) throw SupplyError(dataset + "/hate", hate_quota, synth_hate.size());
    if (synth_nonhate.size() < non_hate_quota)
        throw SupplyError(dataset + "/non_hate", non_hate_quota, synth_nonhate.size());
    Examples out;
    out.reserve(gold_train.size() + level);
    out.insert(out.end(), gold_train.begin(), gold_train.end());
    append_prefix(out, synth_hate, hate_quota, dataset + "/hate");
    append_prefix(out, synth_nonhate, non_hate_quota, dataset + "/non_hate");
    return out;
}

Examples assemble_gold_pool(const std::string& target_id, const Examples& target_train,
                            const std::vector<std::pair<std::string, Examples>>& others) {
    for (const auto& [id, _] : others)
        if (id == target_id) throw PreconditionError("gold pool for " + target_id + " lists the target among others");
    Examples out = target_train;
    for (const auto& [id, train] : others) out.insert(out.end(), train.begin(), train.end());
    return out;
}

std::map<std::pair<std::string, Label>, std::size_t> cross_quotas(std::vector<std::string> source_ids,
                                                                  std::size_t level) {
    std::map<std::pair<std::string, Label>, std::size_t> quotas;
    if (source_ids.empty()) return quotas;
    std::sort(source_ids.begin(), source_ids.end());
    const std::size_t cells = 2 * source_ids.size();
    std::size_t remainder = level % cells;
    for (const auto& id : source_ids) {
        for (auto label : {Label::hate, Label::non_hate}) {
            quotas[{id, label}] = level / cells + (remainder > 0 ? 1 : 0);
            if (remainder > 0) --remainder;
        }
    }
    return quotas;
}

Examples assemble_cross_pool(const std::vector<CrossSource>& sources, std::size_t level,
                             const std::string& target_id) {
    std::vector<std::string> ids;
    for (const auto& s : sources) {
        if (!target_id.empty() && s.dataset_id == target_id)
            throw PreconditionError("cross pool for target " + target_id + " includes the target as a source");
        if (std::find(ids.begin(), ids.end(), s.dataset_id) != ids.end())
            throw PreconditionError("cross pool lists source " + s.dataset_id + " twice");
        ids.push_back(s.dataset_id);
    }
    const auto quotas = cross_quotas(ids, level);
    Examples out;
    for (const auto& s : sources) {
        out.insert(out.end(), s.gold_train.begin(), s.gold_train.end());
        if (level == 0) continue;
        append_prefix(out, s.synth_hate, quotas.at({s.dataset_id, Label::hate}), s.dataset_id + "/hate");
        append_prefix(out, s.synth_nonhate, quotas.at({s.dataset_id, Label::non_hate}), s.dataset_id + "/non_hate");
    }
    return out;
}

}  // namespace augforge::augment
