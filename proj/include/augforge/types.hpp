// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace augforge {

enum class Label : std::uint8_t { hate, non_hate };
enum class Provenance : std::uint8_t { gold, synthetic };

std::string_view to_string(Label label);
std::string_view to_string(Provenance provenance);
Label parse_label(std::string_view text);
Provenance parse_provenance(std::string_view text);

inline Label opposite(Label label) { return label == Label::hate ? Label::non_hate : Label::hate; }

using Tokens = std::vector<std::string>;

/// Identity of an example: the file (or synthetic stream) it came from and
/// its line (or sample index) within it. Two examples with equal text but
/// different origins are distinct.
struct ExampleId {
    std::string source;
    std::uint64_t index = 0;

    auto operator<=>(const ExampleId&) const = default;
    bool operator==(const ExampleId&) const = default;
};

/// Where a synthetic example came from.
struct GeneratorTrace {
    std::string dataset_id;
    Label class_label = Label::hate;
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;

    bool operator==(const GeneratorTrace&) const = default;
};

struct LabeledExample {
    ExampleId id;
    std::string text;
    Tokens tokens;
    Label label = Label::non_hate;
    Provenance provenance = Provenance::gold;
    std::string source_dataset;
    /// Set only for synthetic examples that passed the fidelity filter.
    std::optional<double> confidence;
    std::optional<GeneratorTrace> trace;

    bool operator==(const LabeledExample&) const = default;
};

using Examples = std::vector<LabeledExample>;

std::size_t count_label(const Examples& examples, Label label);

}  // namespace augforge
