// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace augforge {

/// One step of the SplitMix64 mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent seed from a master seed, a stage tag and an
/// optional path of indices (dataset number, class, round, ...).
///
/// The derivation is a pure function of its arguments: every stage owns a
/// fixed tag, so introducing a new stage never shifts the seeds that existing
/// stages receive.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage_tag,
                          std::initializer_list<std::uint64_t> path = {});

/// Seeded random stream with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// standard distributions and std::shuffle are not, so draws are derived
/// from raw engine output here.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace augforge
