// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "augforge/types.hpp"

namespace augforge::augment {

enum class Condition { base, gen, gold_pool, cross_4v1, cross_4v1_gen };

std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view text);
bool involves_generation(Condition condition);
bool is_cross(Condition condition);

struct AugmentationPlan {
    Condition condition = Condition::base;
    /// Total synthetic examples N, split N/2 per class.
    std::size_t level = 0;
    std::string target_dataset;
    std::vector<std::string> source_datasets;

    void validate() const;
    /// Short condition key used in result grids, e.g. "base", "gl",
    /// "gen:2000", "4v1", "4v1_gen:240000".
    std::string label() const;
};

/// Order in which surplus synthetic examples are consumed.
enum class SelectionRule { confidence_desc, seeded_random };

std::string_view to_string(SelectionRule rule);
SelectionRule parse_selection_rule(std::string_view text);

/// Orders a synthetic pool for consumption. confidence_desc sorts by filter
/// confidence, highest first, keeping generation order among ties and
/// placing unscored examples after scored ones in generation order.
Examples rank_synthetic(Examples pool, SelectionRule rule, std::uint64_t seed);

/// Per-class split of a total level: hate receives ceil(N/2), non-hate
/// floor(N/2).
std::pair<std::size_t, std::size_t> within_quota(std::size_t level);

/// Gold train plus the first ceil(N/2) synthetic hate and first floor(N/2)
/// synthetic non-hate examples.
Examples assemble_within(const Examples& gold_train, const Examples& synth_hate, const Examples& synth_nonhate,
                         std::size_t level);

/// Target train plus every other dataset's train examples.
Examples assemble_gold_pool(const std::string& target_id, const Examples& target_train,
                            const std::vector<std::pair<std::string, Examples>>& others);

struct CrossSource {
    std::string dataset_id;
    Examples gold_train;
    Examples synth_hate;
    Examples synth_nonhate;
};

/// Synthetic quota per (source, class) cell: N / (2 * |sources|), with the
/// remainder handed out one per cell in (dataset id, hate before non-hate)
/// order.
std::map<std::pair<std::string, Label>, std::size_t> cross_quotas(std::vector<std::string> source_ids,
                                                                  std::size_t level);

/// All sources' gold train examples plus each cell's synthetic quota. When
/// target_id is given, a source with that id is rejected.
Examples assemble_cross_pool(const std::vector<CrossSource>& sources, std::size_t level,
                             const std::string& target_id = {});

}  // namespace augforge::augment
