// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "augforge/types.hpp"

namespace augforge::eval {

/// Counts with hate as the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    void add(Label predicted, Label gold);
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    bool operator==(const ConfusionCounts&) const = default;
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const PRF&) const = default;
};

enum class Metric { precision, recall, f1 };

std::string_view to_string(Metric metric);
double get(const PRF& prf, Metric metric);

ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> gold);

/// Zero denominators yield zero.
PRF prf(const ConfusionCounts& counts);

/// F1 of the non-hate class, computed by swapping the roles of the classes.
PRF prf_non_hate(const ConfusionCounts& counts);

double harmonic_mean(double precision, double recall);

double macro_f1(std::span<const double> per_class_f1);

/// Averages P, R and F1 with weights proportional to each source dataset's
/// size. Every result needs a positive weight.
PRF weighted_average_1v1(const std::vector<std::pair<std::string, PRF>>& results,
                         const std::map<std::string, double>& weights);

/// Population standard deviation of hate-F1 across runs (at least two).
double stability_report(const std::vector<std::pair<std::string, PRF>>& runs);

}  // namespace augforge::eval
