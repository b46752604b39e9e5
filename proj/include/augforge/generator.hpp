// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "augforge/backend_protocol.hpp"
#include "augforge/ngram_model.hpp"
#include "augforge/types.hpp"

namespace augforge::generator {

enum class Backend { reference_ngram, external };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);

/// Temperatures at or below this decode greedily: the most probable
/// continuation at every step, ties going to the lexicographically smallest
/// token (the end marker ranks after every token).
inline constexpr double kGreedyTemperature = 1e-3;

struct GeneratorSpec {
    std::string dataset_id;
    Label class_label = Label::hate;
    Backend backend = Backend::reference_ngram;
    int order = 3;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::size_t max_tokens = 30;
    double add_k = 0.01;
    /// Passed through to external backends only.
    backend::DecodingParams decoding;

    void validate() const;
};

/// An adapted class-conditional generator for one (dataset, class) pair.
/// Immutable once built; sampling takes its own seed per call.
struct GeneratorHandle {
    GeneratorSpec spec;
    std::size_t training_size = 0;
    std::variant<std::shared_ptr<const NgramModel>, std::shared_ptr<backend::Client>> model;
};

struct SyntheticSequence {
    Tokens tokens;
    std::string dataset_id;
    Label class_label = Label::hate;
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0;

    bool operator==(const SyntheticSequence&) const = default;
};

/// Fits the reference n-gram backend on one class's examples.
GeneratorHandle adapt_generator(const Examples& examples, const GeneratorSpec& spec);

/// Adapts an external generator over the backend protocol. The client must
/// have completed its handshake.
GeneratorHandle adapt_generator(const Examples& examples, const GeneratorSpec& spec,
                                std::shared_ptr<backend::Client> client);

/// Draws n sequences, each started from the begin-of-sequence state with no
/// prompt and stopped at the end marker or max_tokens. The same handle, n
/// and seed give identical output (reference backend).
std::vector<SyntheticSequence> sample(const GeneratorHandle& handle, std::size_t n, std::uint64_t seed);

/// Removes repeated token lists and sequences that reproduce a gold
/// example; survivors keep their order.
std::vector<SyntheticSequence> dedupe(const std::vector<SyntheticSequence>& candidates, const Examples& gold);

/// Converts a sequence into an unfiltered synthetic example.
LabeledExample to_example(const SyntheticSequence& sequence);

inline constexpr int kGeneratorFormatVersion = 1;

void save_generator(const std::filesystem::path& path, const GeneratorHandle& handle);
GeneratorHandle load_generator(const std::filesystem::path& path);
std::string serialize_generator(const GeneratorHandle& handle);
GeneratorHandle deserialize_generator(std::string_view text);

void write_sequences(const std::filesystem::path& path, const std::vector<SyntheticSequence>& sequences);
std::vector<SyntheticSequence> read_sequences(const std::filesystem::path& path);

}  // namespace augforge::generator
