// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "augforge/analysis.hpp"
#include "augforge/augment.hpp"
#include "augforge/classifier.hpp"
#include "augforge/corpus.hpp"
#include "augforge/error.hpp"
#include "augforge/experiment.hpp"
#include "augforge/filter.hpp"
#include "augforge/generator.hpp"
#include "augforge/manifest.hpp"
#include "augforge/metrics.hpp"

namespace fs = std::filesystem;
using namespace augforge;

namespace {

struct Globals {
    std::string manifest;
    std::optional<std::uint64_t> seed;
    std::string output;
    std::string backend;
    bool verbose = false;
    bool quiet = false;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

experiment::ExperimentManifest manifest_from(const Globals& g) {
    if (g.manifest.empty()) throw InputError("--manifest is required for this verb");
    auto m = experiment::load_manifest(g.manifest);
    if (g.seed) m.seeds = {*g.seed};
    if (!g.output.empty()) m.output_dir = g.output;
    if (!g.backend.empty()) {
        m.generator.backend = generator::Backend::external;
        m.generator.decoding.temperature = m.generator.temperature;
        m.generator_backend = g.backend;
    }
    return m;
}

corpus::DatasetCatalog catalog_from(const std::string& path) {
    return path.empty() ? corpus::DatasetCatalog::defaults() : corpus::DatasetCatalog::load(path);
}

std::vector<generator::SyntheticSequence> as_sequences(const Examples& examples, Label label) {
    std::vector<generator::SyntheticSequence> out;
    for (const auto& e : examples) {
        generator::SyntheticSequence s{e.tokens, e.source_dataset, label, 0, 0};
        if (e.trace) {
            s.dataset_id = e.trace->dataset_id;
            s.seed = e.trace->seed;
            s.sample_index = e.trace->sample_index;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    Globals g;
    CLI::App app{"augforge: class-conditional augmentation pipeline for binary text classification"};
    app.require_subcommand(1);
    app.add_option("--manifest", g.manifest, "experiment manifest (JSON)");
    app.add_option("--seed", g.seed, "override the manifest seeds with one seed");
    app.add_option("--output", g.output, "override the manifest output directory");
    app.add_option("--backend", g.backend, "run generators on this external backend id");
    app.add_flag("-v,--verbose", g.verbose, "debug logging");
    app.add_flag("-q,--quiet", g.quiet, "warnings and errors only");

    // ingest
    std::string in_path, dataset_id, catalog_path, out_path;
    std::size_t max_tokens = corpus::kDefaultMaxTokens;
    auto* ingest = app.add_subcommand("ingest", "normalize one dataset file to labeled examples (JSONL)");
    ingest->add_option("--input", in_path, "delimited or JSONL dataset file")->required();
    ingest->add_option("--dataset", dataset_id, "catalog dataset id")->required();
    ingest->add_option("--catalog", catalog_path, "catalog JSON (default: built-in)");
    ingest->add_option("--max-tokens", max_tokens, "token cap");
    ingest->add_option("--out", out_path, "output JSONL (default: stdout)");

    // split
    double ratio = 0.8;
    int folds = 0;
    std::string out_dir;
    auto* split = app.add_subcommand("split", "stratified train/test split or k folds");
    split->add_option("--input", in_path, "examples JSONL")->required();
    split->add_option("--ratio", ratio, "train fraction");
    split->add_option("--folds", folds, "write k folds instead of one split");
    split->add_option("--out-dir", out_dir, "output directory")->required();

    // adapt
    std::string class_name = "hate";
    generator::GeneratorSpec gen_spec;
    auto* adapt = app.add_subcommand("adapt", "adapt a class-conditional reference generator");
    adapt->add_option("--input", in_path, "gold train examples JSONL")->required();
    adapt->add_option("--class", class_name, "hate or non_hate");
    adapt->add_option("--dataset", gen_spec.dataset_id, "dataset id recorded in traces");
    adapt->add_option("--order", gen_spec.order, "n-gram order");
    adapt->add_option("--temperature", gen_spec.temperature, "sampling temperature");
    adapt->add_option("--max-tokens", gen_spec.max_tokens, "sequence length cap");
    adapt->add_option("--add-k", gen_spec.add_k, "additive smoothing");
    adapt->add_option("--out", out_path, "generator artifact")->required();

    // generate
    std::string generator_path, dedupe_against;
    std::size_t count = 100;
    auto* generate = app.add_subcommand("generate", "sample synthetic sequences from a saved generator");
    generate->add_option("--generator", generator_path, "generator artifact")->required();
    generate->add_option("-n,--count", count, "number of samples");
    generate->add_option("--dedupe-against", dedupe_against, "gold examples JSONL to dedupe against");
    generate->add_option("--out", out_path, "sequences JSONL (default: stdout)");

    // filter
    std::string candidates_path, classifier_path;
    filter::FilterConfig filter_cfg;
    auto* filter_cmd = app.add_subcommand("filter", "keep hate sequences the classifier scores at or above threshold");
    filter_cmd->add_option("--candidates", candidates_path, "sequences JSONL")->required();
    filter_cmd->add_option("--classifier", classifier_path, "classifier artifact")->required();
    filter_cmd->add_option("--threshold", filter_cfg.threshold, "confidence threshold");
    filter_cmd->add_flag("--apply-to-nonhate", filter_cfg.apply_to_nonhate, "also filter non-hate sequences");
    filter_cmd->add_option("--out", out_path, "kept examples JSONL (default: stdout)");

    // augment
    std::string gold_path, hate_path, nonhate_path, selection = "confidence_desc";
    std::size_t level = 0;
    auto* augment_cmd = app.add_subcommand("augment", "assemble a within-dataset augmented training set");
    augment_cmd->add_option("--gold", gold_path, "gold train JSONL")->required();
    augment_cmd->add_option("--hate", hate_path, "synthetic hate examples JSONL");
    augment_cmd->add_option("--nonhate", nonhate_path, "synthetic non-hate examples JSONL");
    augment_cmd->add_option("--level", level, "total synthetic examples N");
    augment_cmd->add_option("--selection", selection, "confidence_desc or seeded_random");
    augment_cmd->add_option("--out", out_path, "training set JSONL (default: stdout)");

    // train
    classifier::ClassifierSpec clf_spec;
    auto* train = app.add_subcommand("train", "fit the reference linear classifier");
    train->add_option("--input", in_path, "training examples JSONL")->required();
    train->add_option("--epochs", clf_spec.epochs, "gradient descent epochs");
    train->add_option("--learning-rate", clf_spec.learning_rate, "step size");
    train->add_option("--feature-dim", clf_spec.feature_dim, "hashed feature space size");
    train->add_flag("--class-weights", clf_spec.class_weights, "inverse-frequency class weights");
    train->add_option("--out", out_path, "classifier artifact")->required();

    // evaluate
    std::string test_path;
    double decision_threshold = classifier::kDefaultDecisionThreshold;
    auto* evaluate = app.add_subcommand("evaluate", "hate-class P/R/F1 of a classifier on a test set");
    evaluate->add_option("--classifier", classifier_path, "classifier artifact")->required();
    evaluate->add_option("--test", test_path, "test examples JSONL")->required();
    evaluate->add_option("--decision-threshold", decision_threshold, "hate if score >= threshold");

    // analyze
    std::string synthetic_path;
    std::size_t top_n = 20, min_count = analysis::kDefaultMinCount;
    double smoothing_k = analysis::kDefaultSmoothingK;
    auto* analyze = app.add_subcommand("analyze", "PMI table of the hate class; novel terms with --synthetic");
    analyze->add_option("--input", in_path, "gold examples JSONL")->required();
    analyze->add_option("--synthetic", synthetic_path, "synthetic examples JSONL");
    analyze->add_option("--top-n", top_n, "rows to print");
    analyze->add_option("--min-count", min_count, "minimum total count");
    analyze->add_option("--smoothing-k", smoothing_k, "additive smoothing");

    // run, validate, stability, report
    bool no_resume = false;
    auto* run = app.add_subcommand("run", "run the full pipeline of a manifest");
    run->add_flag("--no-resume", no_resume, "recompute every stage");
    auto* validate = app.add_subcommand("validate", "check a manifest and list every problem");
    auto* stability = app.add_subcommand("stability", "k-fold hate-F1 standard deviation, base vs augmented");
    std::string record_path, format = "table-text";
    auto* report = app.add_subcommand("report", "render a run record");
    report->add_option("--record", record_path, "run_record.json (default: from --manifest)");
    report->add_option("--format", format, "table-text, delimited or document");
    report->add_option("--out", out_path, "output file (default: stdout)");
    (void)validate;

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    try {
        if (ingest->parsed()) {
            const auto catalog = catalog_from(catalog_path);
            auto result = corpus::ingest_dataset(in_path, catalog.at(dataset_id), max_tokens);
            std::string text;
            for (const auto& e : result.examples) text += corpus::to_json_line(e) + "\n";
            write_text(out_path, text);
            spdlog::info("{} records, {} kept, {} discarded, {} duplicates, hate ratio {:.3f}", result.stats.records,
                         result.stats.kept, result.stats.discarded, result.stats.duplicates, result.stats.hate_ratio);
        } else if (split->parsed()) {
            const auto examples = corpus::read_examples(in_path);
            const std::uint64_t seed = g.seed.value_or(0);
            if (folds > 0) {
                const auto splits = corpus::kfold_splits(examples, folds, seed);
                for (std::size_t i = 0; i < splits.size(); ++i) {
                    corpus::write_examples(fs::path(out_dir) / ("fold-" + std::to_string(i) + ".train.jsonl"), splits[i].train);
                    corpus::write_examples(fs::path(out_dir) / ("fold-" + std::to_string(i) + ".test.jsonl"), splits[i].test);
                }
            } else {
                const auto s = corpus::stratified_split(examples, ratio, seed);
                corpus::write_examples(fs::path(out_dir) / "train.jsonl", s.train);
                corpus::write_examples(fs::path(out_dir) / "test.jsonl", s.test);
                spdlog::info("train {} ({} hate), test {} ({} hate)", s.train.size(), count_label(s.train, Label::hate),
                             s.test.size(), count_label(s.test, Label::hate));
            }
        } else if (adapt->parsed()) {
            gen_spec.class_label = parse_label(class_name);
            gen_spec.seed = g.seed.value_or(0);
            Examples examples;
            for (auto& e : corpus::read_examples(in_path))
                if (e.label == gen_spec.class_label) examples.push_back(std::move(e));
            if (gen_spec.dataset_id.empty() && !examples.empty()) gen_spec.dataset_id = examples.front().source_dataset;
            generator::save_generator(out_path, generator::adapt_generator(examples, gen_spec));
            spdlog::info("adapted {} generator on {} examples", class_name, examples.size());
        } else if (generate->parsed()) {
            const auto handle = generator::load_generator(generator_path);
            auto sequences = generator::sample(handle, count, g.seed.value_or(handle.spec.seed));
            if (!dedupe_against.empty()) sequences = generator::dedupe(sequences, corpus::read_examples(dedupe_against));
            std::string text;
            for (const auto& s : sequences) text += corpus::to_json_line(generator::to_example(s)) + "\n";
            write_text(out_path, text);
        } else if (filter_cmd->parsed()) {
            const auto clf = classifier::load_classifier(classifier_path);
            const auto examples = corpus::read_examples(candidates_path);
            Examples kept;
            std::size_t candidates = 0;
            for (auto label : {Label::hate, Label::non_hate}) {
                Examples of_label;
                for (const auto& e : examples)
                    if (e.label == label) of_label.push_back(e);
                candidates += of_label.size();
                const auto seqs = as_sequences(of_label, label);
                if (label == Label::non_hate && !filter_cfg.apply_to_nonhate) {
                    auto passed = filter::pass_through_nonhate(seqs);
                    kept.insert(kept.end(), passed.begin(), passed.end());
                } else {
                    auto result = filter::filter_candidates(seqs, clf, filter_cfg);
                    kept.insert(kept.end(), result.kept.begin(), result.kept.end());
                }
            }
            std::string text;
            for (const auto& e : kept) text += corpus::to_json_line(e) + "\n";
            write_text(out_path, text);
            spdlog::info("kept {} of {} candidates at threshold {}", kept.size(), candidates, filter_cfg.threshold);
        } else if (augment_cmd->parsed()) {
            const auto rule = augment::parse_selection_rule(selection);
            const auto seed = g.seed.value_or(0);
            const Examples hate = hate_path.empty() ? Examples{} : augment::rank_synthetic(corpus::read_examples(hate_path), rule, seed);
            const Examples nonhate =
                nonhate_path.empty() ? Examples{} : augment::rank_synthetic(corpus::read_examples(nonhate_path), rule, seed);
            const auto out = augment::assemble_within(corpus::read_examples(gold_path), hate, nonhate, level);
            std::string text;
            for (const auto& e : out) text += corpus::to_json_line(e) + "\n";
            write_text(out_path, text);
        } else if (train->parsed()) {
            clf_spec.seed = g.seed.value_or(0);
            classifier::save_classifier(out_path, classifier::fit_classifier(corpus::read_examples(in_path), clf_spec));
        } else if (evaluate->parsed()) {
            const auto clf = classifier::load_classifier(classifier_path);
            const auto test = corpus::read_examples(test_path);
            std::vector<Tokens> tokens;
            std::vector<Label> gold;
            for (const auto& e : test) {
                tokens.push_back(e.tokens);
                gold.push_back(e.label);
            }
            const auto counts = eval::confusion(classifier::predict(clf, tokens, decision_threshold), gold);
            const auto prf = eval::prf(counts);
            std::cout << "tp=" << counts.tp << " fp=" << counts.fp << " fn=" << counts.fn << " tn=" << counts.tn << "\n"
                      << "precision=" << prf.precision << " recall=" << prf.recall << " f1=" << prf.f1 << "\n";
        } else if (analyze->parsed()) {
            const auto gold = corpus::read_examples(in_path);
            if (synthetic_path.empty()) {
                auto table = analysis::pmi_table(gold, Label::hate, min_count, smoothing_k);
                if (table.size() > top_n) table.resize(top_n);
                std::cout << analysis::to_tsv(table);
            } else {
                std::cout << analysis::to_tsv(
                    analysis::novel_terms(corpus::read_examples(synthetic_path), gold, Label::hate, top_n, 1, smoothing_k));
            }
        } else if (validate->parsed()) {
            const auto m = manifest_from(g);
            const auto problems = experiment::manifest_problems(m);
            for (const auto& p : problems) std::cout << "error: " << p << "\n";
            if (!problems.empty()) return 2;
            std::cout << "manifest ok (hash " << experiment::manifest_hash(m) << ")\n";
        } else if (run->parsed()) {
            const auto m = manifest_from(g);
            const auto record = experiment::run(m, {true, !no_resume});
            std::cout << experiment::render_report(record, experiment::ReportFormat::table_text);
            std::cout << "\nrun record: " << (record.directory / "run_record.json").string() << "\n";
            return record.failures.empty() ? 0 : 3;
        } else if (stability->parsed()) {
            const auto m = manifest_from(g);
            for (const auto& r : eval::run_stability(m))
                std::cout << r.dataset << " " << r.model << ": sigma(base)=" << r.base_sigma << " sigma("
                          << r.augmented_condition << ")=" << r.augmented_sigma << " over " << r.base_runs.size()
                          << " folds\n";
        } else if (report->parsed()) {
            fs::path path = record_path;
            if (path.empty()) {
                const auto m = manifest_from(g);
                path = m.output_dir / experiment::manifest_hash(m) / "run_record.json";
            }
            write_text(out_path, experiment::render_report(experiment::load_run_record(path),
                                                           experiment::parse_report_format(format)));
        }
    } catch (const ValidationError& e) {
        for (const auto& p : e.problems()) std::cerr << "error: " << p << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
