// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

// Reference model server for the line-delimited backend protocol: the n-gram
// generator and the linear classifier, with optional injected faults.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "augforge/backend_protocol.hpp"
#include "augforge/classifier.hpp"
#include "augforge/corpus.hpp"
#include "augforge/error.hpp"
#include "augforge/generator.hpp"
#include "augforge/rng.hpp"

namespace {

using nlohmann::json;
namespace ab = augforge::backend;

enum class Fault { none, version2, silent, shortcount, badscore, overlong, error, wrongid, heartbeat, crash, garbage };

Fault parse_fault(const std::string& text) {
    static const std::pair<const char*, Fault> names[] = {
        {"none", Fault::none},         {"version2", Fault::version2}, {"silent", Fault::silent},
        {"short", Fault::shortcount},  {"badscore", Fault::badscore}, {"overlong", Fault::overlong},
        {"error", Fault::error},       {"wrongid", Fault::wrongid},   {"heartbeat", Fault::heartbeat},
        {"crash", Fault::crash},       {"garbage", Fault::garbage}};
    for (const auto& [name, f] : names)
        if (text == name) return f;
    throw augforge::InputError("unknown fault '" + text + "'");
}

struct Options {
    std::uint64_t seed = 1;
    int order = 3;
    int epochs = 200;
    std::string fault = "none";
    int heartbeats = 3;
    int heartbeat_ms = 20;
};

class Server {
public:
    Server(Options o, Fault fault) : o_(std::move(o)), fault_(fault) {}

    /// Handles one request; returns false when the server should exit.
    bool handle(const json& request) {
        const auto id = request.at("id").get<std::uint64_t>();
        const auto kind = ab::parse_kind(request.at("kind").get<std::string>());
        const std::uint64_t reply_id = fault_ == Fault::wrongid && kind != ab::MessageKind::handshake ? id + 1 : id;
        try {
            switch (kind) {
                case ab::MessageKind::handshake: {
                    auto r = ab::make_result(id);
                    r["version"] = fault_ == Fault::version2 ? 2 : ab::kProtocolVersion;
                    r["verbs"] = {"fit", "generate", "score"};
                    send(r);
                    return true;
                }
                case ab::MessageKind::fit: return fit(request, reply_id);
                case ab::MessageKind::generate: generate(request, reply_id); return true;
                case ab::MessageKind::score: score(request, reply_id); return true;
                default: send(ab::make_error(reply_id, "unsupported request kind"));
            }
        } catch (const std::exception& e) {
            send(ab::make_error(reply_id, e.what()));
        }
        return true;
    }

private:
    static void send(const json& message) { std::cout << ab::encode(message) << '\n' << std::flush; }

    bool fit(const json& request, std::uint64_t reply_id) {
        if (fault_ == Fault::crash) return false;
        if (fault_ == Fault::silent) {
            std::this_thread::sleep_for(std::chrono::hours(1));
            return false;
        }
        if (fault_ == Fault::error) {
            send(ab::make_error(reply_id, "injected fit failure"));
            return true;
        }
        if (fault_ == Fault::garbage) {
            std::cout << "this is not a protocol message\n" << std::flush;
            return true;
        }
        const auto texts = request.at("texts").get<std::vector<std::string>>();
        const auto labels = request.at("labels").get<std::vector<std::string>>();
        if (texts.size() != labels.size()) throw augforge::ProtocolError("texts and labels differ in length");
        if (texts.empty()) throw augforge::PreconditionError("fit needs at least one example");

        augforge::Examples examples;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            augforge::LabeledExample ex;
            ex.id = {"backend", i};
            ex.text = texts[i];
            ex.tokens = augforge::corpus::preprocess(texts[i]);
            ex.label = augforge::parse_label(labels[i]);
            examples.push_back(std::move(ex));
        }
        if (fault_ == Fault::heartbeat)
            for (int i = 0; i < o_.heartbeats; ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(o_.heartbeat_ms));
                send({{"kind", "heartbeat"}, {"id", reply_id}});
            }

        generator_.reset();
        classifier_.reset();
        const auto hate = augforge::count_label(examples, augforge::Label::hate);
        if (hate > 0 && hate < examples.size()) {
            augforge::classifier::ClassifierSpec cs;
            cs.epochs = o_.epochs;
            classifier_ = augforge::classifier::fit_classifier(examples, cs);
        } else {
            augforge::generator::GeneratorSpec gs;
            gs.class_label = examples.front().label;
            gs.order = o_.order;
            gs.seed = o_.seed;
            generator_ = augforge::generator::adapt_generator(examples, gs);
        }
        send(ab::make_result(reply_id));
        return true;
    }

    void generate(const json& request, std::uint64_t reply_id) {
        if (!generator_) throw augforge::PreconditionError("generate needs a single-class fit");
        auto n = request.at("n").get<std::size_t>();
        const auto max_tokens = request.at("max_tokens").get<std::size_t>();
        auto handle = *generator_;
        handle.spec.max_tokens = max_tokens;
        if (request.contains("temperature")) handle.spec.temperature = request["temperature"].get<double>();
        if (fault_ == Fault::shortcount && n > 0) --n;
        json sequences = json::array();
        for (const auto& s : augforge::generator::sample(handle, n, augforge::derive_seed(o_.seed, calls_++, {}))) {
            auto tokens = s.tokens;
            if (fault_ == Fault::overlong)
                while (tokens.size() <= max_tokens + 5) tokens.push_back("extra");
            sequences.push_back(augforge::corpus::join_tokens(tokens));
        }
        auto r = ab::make_result(reply_id);
        r["sequences"] = std::move(sequences);
        send(r);
    }

    void score(const json& request, std::uint64_t reply_id) {
        if (!classifier_) throw augforge::PreconditionError("score before a two-class fit");
        std::vector<augforge::Tokens> tokens;
        for (const auto& t : request.at("texts")) tokens.push_back(augforge::corpus::preprocess(t.get<std::string>()));
        auto scores = augforge::classifier::score(*classifier_, tokens);
        if (fault_ == Fault::shortcount && !scores.empty()) scores.pop_back();
        if (fault_ == Fault::badscore && !scores.empty()) scores.front() = 1.5;
        auto r = ab::make_result(reply_id);
        r["scores"] = scores;
        send(r);
    }

    Options o_;
    Fault fault_;
    std::uint64_t calls_ = 0;
    std::optional<augforge::generator::GeneratorHandle> generator_;
    std::optional<augforge::classifier::ConfidenceClassifier> classifier_;
};

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Reference model server speaking the augforge backend protocol on stdin/stdout"};
    app.add_option("--seed", o.seed, "sampling seed");
    app.add_option("--order", o.order, "n-gram order of the generator");
    app.add_option("--epochs", o.epochs, "classifier training epochs");
    app.add_option("--fault", o.fault,
                   "misbehave: none, version2, silent, short, badscore, overlong, error, wrongid, heartbeat, crash, "
                   "garbage");
    app.add_option("--heartbeats", o.heartbeats, "heartbeats sent before a fit result (fault heartbeat)");
    app.add_option("--heartbeat-ms", o.heartbeat_ms, "delay before each heartbeat");
    CLI11_PARSE(app, argc, argv);

    Fault fault;
    try {
        fault = parse_fault(o.fault);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    Server server(o, fault);
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        json request;
        try {
            request = ab::decode(line);
        } catch (const std::exception& e) {
            std::cerr << "augforge-backend: " << e.what() << '\n';
            continue;
        }
        if (!server.handle(request)) return 1;
    }
    return 0;
}
