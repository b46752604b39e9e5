// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include "augforge/backend_protocol.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "augforge/corpus.hpp"
#include "augforge/error.hpp"

namespace augforge::backend {

using nlohmann::json;

std::string_view to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::handshake: return "handshake";
        case MessageKind::fit: return "fit";
        case MessageKind::generate: return "generate";
        case MessageKind::score: return "score";
        case MessageKind::result: return "result";
        case MessageKind::error: return "error";
        case MessageKind::heartbeat: return "heartbeat";
    }
    return "error";
}

MessageKind parse_kind(std::string_view text) {
    for (auto k : {MessageKind::handshake, MessageKind::fit, MessageKind::generate, MessageKind::score,
                   MessageKind::result, MessageKind::error, MessageKind::heartbeat})
        if (to_string(k) == text) return k;
    throw ProtocolError("unknown message kind '" + std::string(text) + "'");
}

std::string encode(const json& message) {
    if (!message.is_object() || !message.contains("kind") || !message.contains("id"))
        throw ProtocolError("message must be an object with kind and id");
    // dump() escapes control characters, so the result never spans lines.
    return message.dump(-1, ' ', false, json::error_handler_t::replace);
}

json decode(std::string_view line) {
    json message;
    try {
        message = json::parse(line);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
    if (!message.is_object() || !message.contains("kind") || !message["kind"].is_string() ||
        !message.contains("id") || !message["id"].is_number_unsigned())
        throw ProtocolError("message lacks a string kind or an integer id: " + std::string(line));
    parse_kind(message["kind"].get<std::string>());
    return message;
}

json make_handshake(std::uint64_t id) { return {{"kind", "handshake"}, {"id", id}, {"version", kProtocolVersion}}; }

json make_fit(std::uint64_t id, const std::vector<std::string>& texts, const std::vector<Label>& labels) {
    if (texts.size() != labels.size()) throw PreconditionError("fit: texts and labels differ in length");
    json label_array = json::array();
    for (auto l : labels) label_array.push_back(std::string(to_string(l)));
    return {{"kind", "fit"}, {"id", id}, {"texts", texts}, {"labels", label_array}};
}

json make_generate(std::uint64_t id, std::size_t n, std::size_t max_tokens, const DecodingParams& params) {
    json m = {{"kind", "generate"}, {"id", id}, {"n", n}, {"max_tokens", max_tokens}};
    if (params.temperature) m["temperature"] = *params.temperature;
    if (params.top_k) m["top_k"] = *params.top_k;
    if (params.top_p) m["top_p"] = *params.top_p;
    return m;
}

json make_score(std::uint64_t id, const std::vector<std::string>& texts) {
    return {{"kind", "score"}, {"id", id}, {"texts", texts}};
}

json make_result(std::uint64_t id) { return {{"kind", "result"}, {"id", id}}; }

json make_error(std::uint64_t id, const std::string& message) {
    return {{"kind", "error"}, {"id", id}, {"message", message}};
}

// ---------------------------------------------------------------------------

Client::Client(ClientOptions options) : options_(std::move(options)) {
    if (options_.name.empty()) options_.name = options_.command.empty() ? "backend" : options_.command.front();
    process_ = std::make_unique<Subprocess>(options_.command,
                                            std::vector<std::pair<std::string, std::string>>{{kProtocolEnvVar, "1"}});
}

json Client::round_trip(json request, std::chrono::milliseconds timeout, bool allow_heartbeat) {
    const std::uint64_t id = request.at("id").get<std::uint64_t>();
    const std::string verb = request.at("kind").get<std::string>();
    if (!process_->write_line(encode(request)))
        throw ProtocolError("backend " + options_.name + " is not accepting requests");
    for (;;) {
        std::optional<std::string> line;
        try {
            line = process_->read_line(timeout);
        } catch (const TimeoutError&) {
            throw;
        } catch (const ProtocolError& e) {
            throw ProtocolError("backend " + options_.name + ": " + e.what());
        }
        if (!line)
            throw TimeoutError("backend " + options_.name + " did not answer " + verb + " request " +
                               std::to_string(id) + " within " + std::to_string(timeout.count()) + " ms");
        json response = decode(*line);
        const auto kind = parse_kind(response["kind"].get<std::string>());
        const auto rid = response["id"].get<std::uint64_t>();
        if (rid != id)
            throw ProtocolError("backend " + options_.name + " answered id " + std::to_string(rid) +
                                " while request " + std::to_string(id) + " is outstanding");
        if (kind == MessageKind::heartbeat && allow_heartbeat) continue;
        if (kind == MessageKind::error)
            throw BackendError("backend " + options_.name + " failed " + verb + ": " +
                               response.value("message", std::string("(no message)")));
        if (kind != MessageKind::result)
            throw ProtocolError("backend " + options_.name + " sent unexpected " + std::string(to_string(kind)));
        return response;
    }
}

void Client::require_handshake(std::string_view verb) const {
    if (!capabilities_) throw ProtocolError(std::string(verb) + " before handshake");
}

Capabilities Client::handshake() {
    json r = round_trip(make_handshake(next_id_++), options_.timeouts.handshake, false);
    Capabilities caps;
    if (!r.contains("version") || !r["version"].is_number_integer())
        throw ProtocolError("handshake result from " + options_.name + " lacks a version");
    caps.version = r["version"].get<int>();
    if (caps.version != kProtocolVersion)
        throw VersionError("backend " + options_.name + " speaks protocol version " + std::to_string(caps.version) +
                           ", client speaks " + std::to_string(kProtocolVersion));
    if (r.contains("verbs")) caps.verbs = r["verbs"].get<std::vector<std::string>>();
    capabilities_ = caps;
    return caps;
}

void Client::fit(const std::vector<std::string>& texts, const std::vector<Label>& labels) {
    require_handshake("fit");
    round_trip(make_fit(next_id_++, texts, labels), options_.timeouts.fit_silence, true);
}

std::vector<Tokens> Client::remote_generate(std::size_t n, std::size_t max_tokens, const DecodingParams& params) {
    if (n == 0) return {};
    require_handshake("generate");
    json r = round_trip(make_generate(next_id_++, n, max_tokens, params), options_.timeouts.request, false);
    if (!r.contains("sequences") || !r["sequences"].is_array())
        throw ProtocolError("generate result lacks sequences");
    const auto& seqs = r["sequences"];
    if (seqs.size() != n)
        throw ProtocolError("backend " + options_.name + " returned " + std::to_string(seqs.size()) +
                            " sequences, " + std::to_string(n) + " requested");
    std::vector<Tokens> out;
    out.reserve(n);
    std::size_t truncated = 0;
    for (const auto& s : seqs) {
        if (!s.is_string()) throw ProtocolError("generate result holds a non-string sequence");
        Tokens t = corpus::preprocess(s.get<std::string>(), std::numeric_limits<std::size_t>::max());
        if (t.size() > max_tokens) {
            t.resize(max_tokens);
            ++truncated;
        }
        out.push_back(std::move(t));
    }
    if (truncated > 0)
        spdlog::warn("backend {}: truncated {} over-length sequences to {} tokens", options_.name, truncated,
                     max_tokens);
    return out;
}

std::vector<double> Client::remote_score(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    require_handshake("score");
    json r = round_trip(make_score(next_id_++, texts), options_.timeouts.request, false);
    if (!r.contains("scores") || !r["scores"].is_array()) throw ProtocolError("score result lacks scores");
    const auto& scores = r["scores"];
    if (scores.size() != texts.size())
        throw ProtocolError("backend " + options_.name + " returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(texts.size()) + " texts");
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
        if (!s.is_number()) throw ProtocolError("score result holds a non-numeric score");
        double v = s.get<double>();
        if (!(v >= 0.0 && v <= 1.0))
            throw ProtocolError("backend " + options_.name + " returned score " + s.dump() + " outside [0,1]");
        out.push_back(v);
    }
    return out;
}

}  // namespace augforge::backend
