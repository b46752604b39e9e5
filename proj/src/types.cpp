// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/types.hpp"

#include <algorithm>
#include <string>

#include "augforge/error.hpp"

namespace augforge {

std::string_view to_string(Label label) { return label == Label::hate ? "hate" : "non_hate"; }

std::string_view to_string(Provenance provenance) {
    return provenance == Provenance::gold ? "gold" : "synthetic";
}

Label parse_label(std::string_view text) {
    if (text == "hate") return Label::hate;
    if (text == "non_hate") return Label::non_hate;
    throw InputError("unknown label '" + std::string(text) + "' (expected hate or non_hate)");
}

Provenance parse_provenance(std::string_view text) {
    if (text == "gold") return Provenance::gold;
    if (text == "synthetic") return Provenance::synthetic;
    throw InputError("unknown provenance '" + std::string(text) + "'");
}

std::size_t count_label(const Examples& examples, Label label) {
    return static_cast<std::size_t>(std::count_if(
        examples.begin(), examples.end(), [label](const LabeledExample& e) { return e.label == label; }));
}

SupplyError::SupplyError(const std::string& cell, std::size_t required, std::size_t available)
    : Error("insufficient synthetic supply for " + cell + ": required " + std::to_string(required) +
            ", available " + std::to_string(available)),
      required_(required),
      available_(available) {}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string out = "manifest validation failed:";
    for (const auto& p : problems) out += "\n  - " + p;
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace augforge
