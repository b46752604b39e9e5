// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/metrics.hpp"

#include <cmath>

#include "augforge/error.hpp"

namespace augforge::eval {

void ConfusionCounts::add(Label predicted, Label gold) {
    if (predicted == Label::hate) {
        ++(gold == Label::hate ? tp : fp);
    } else {
        ++(gold == Label::hate ? fn : tn);
    }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
}

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::precision: return "P";
        case Metric::recall: return "R";
        case Metric::f1: return "F1";
    }
    return "F1";
}

double get(const PRF& prf, Metric metric) {
    switch (metric) {
        case Metric::precision: return prf.precision;
        case Metric::recall: return prf.recall;
        case Metric::f1: return prf.f1;
    }
    return prf.f1;
}

ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> gold) {
    if (predictions.size() != gold.size())
        throw PreconditionError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(gold.size()) + " gold labels");
    if (gold.empty()) throw PreconditionError("confusion: no examples");
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) c.add(predictions[i], gold[i]);
    return c;
}

double harmonic_mean(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

PRF prf(const ConfusionCounts& c) {
    PRF r;
    r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = harmonic_mean(r.precision, r.recall);
    return r;
}

PRF prf_non_hate(const ConfusionCounts& c) { return prf(ConfusionCounts{c.tn, c.fn, c.fp, c.tp}); }

double macro_f1(std::span<const double> per_class_f1) {
    if (per_class_f1.empty()) throw PreconditionError("macro_f1: no class scores");
    double sum = 0.0;
    for (double f : per_class_f1) sum += f;
    return sum / static_cast<double>(per_class_f1.size());
}

PRF weighted_average_1v1(const std::vector<std::pair<std::string, PRF>>& results,
                         const std::map<std::string, double>& weights) {
    if (results.empty()) throw PreconditionError("weighted_average_1v1: no results");
    PRF acc;
    double total = 0.0;
    for (const auto& [source, r] : results) {
        auto it = weights.find(source);
        if (it == weights.end()) throw PreconditionError("weighted_average_1v1: no weight for " + source);
        if (!(it->second > 0.0)) throw PreconditionError("weighted_average_1v1: weight of " + source + " not positive");
        acc.precision += it->second * r.precision;
        acc.recall += it->second * r.recall;
        acc.f1 += it->second * r.f1;
        total += it->second;
    }
    acc.precision /= total;
    acc.recall /= total;
    acc.f1 /= total;
    return acc;
}

double stability_report(const std::vector<std::pair<std::string, PRF>>& runs) {
    if (runs.size() < 2) throw PreconditionError("stability_report: needs at least two runs");
    double mean = 0.0;
    for (const auto& [_, r] : runs) mean += r.f1;
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& [_, r] : runs) var += (r.f1 - mean) * (r.f1 - mean);
    return std::sqrt(var / static_cast<double>(runs.size()));
}

}  // namespace augforge::eval
