// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/filter.hpp"

#include "augforge/error.hpp"

namespace augforge::filter {

void FilterConfig::validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw PreconditionError("filter threshold must lie in [0,1]");
}

FilterResult filter_scored(const std::vector<generator::SyntheticSequence>& candidates,
                           std::span<const double> scores, const FilterConfig& cfg) {
    cfg.validate();
    if (scores.size() != candidates.size())
        throw PreconditionError("filter: scores and candidates differ in length");
    FilterResult result;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.class_label == Label::non_hate && !cfg.apply_to_nonhate)
            throw PreconditionError("filter_candidates: non-hate candidate from " + c.dataset_id +
                                    " while non-hate filtering is off");
        const bool keep = c.class_label == Label::hate ? scores[i] >= cfg.threshold
                                                       : scores[i] <= 1.0 - cfg.threshold;
        if (!keep) continue;
        LabeledExample e = generator::to_example(c);
        e.confidence = c.class_label == Label::hate ? scores[i] : 1.0 - scores[i];
        result.kept.push_back(std::move(e));
    }
    auto& r = result.report;
    r.generated = r.candidates = candidates.size();
    r.kept = result.kept.size();
    r.threshold = cfg.threshold;
    if (r.candidates > 0) r.keep_rate = static_cast<double>(r.kept) / static_cast<double>(r.candidates);
    return result;
}

FilterResult filter_candidates(const std::vector<generator::SyntheticSequence>& candidates,
                               const classifier::ConfidenceClassifier& clf, const FilterConfig& cfg) {
    cfg.validate();
    std::vector<Tokens> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) texts.push_back(c.tokens);
    const auto scores = classifier::score(clf, texts);
    return filter_scored(candidates, scores, cfg);
}

Examples pass_through_nonhate(const std::vector<generator::SyntheticSequence>& candidates) {
    Examples out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (c.class_label != Label::non_hate)
            throw PreconditionError("pass_through_nonhate: hate candidate from " + c.dataset_id);
        out.push_back(generator::to_example(c));
    }
    return out;
}

}  // namespace augforge::filter
