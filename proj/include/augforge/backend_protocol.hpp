// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <chrono>
#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "augforge/subprocess.hpp"
#include "augforge/types.hpp"

namespace augforge::backend {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char* kProtocolEnvVar = "AUGFORGE_BACKEND_PROTOCOL";

enum class MessageKind { handshake, fit, generate, score, result, error, heartbeat };

std::string_view to_string(MessageKind kind);
MessageKind parse_kind(std::string_view text);

struct Timeouts {
    std::chrono::milliseconds handshake{30'000};
    /// Fit has no overall limit; it fails only if the backend stays silent
    /// (no heartbeat or result) for this long. Backends beat every 10 s.
    std::chrono::milliseconds fit_silence{30'000};
    std::chrono::milliseconds request{600'000};
};

struct Capabilities {
    int version = 0;
    std::vector<std::string> verbs;
};

/// Decoding parameters forwarded opaquely to generator backends.
struct DecodingParams {
    std::optional<double> temperature;
    std::optional<int> top_k;
    std::optional<double> top_p;
};

// Message framing: one JSON object per UTF-8 line with "kind" and "id".

std::string encode(const nlohmann::json& message);
nlohmann::json decode(std::string_view line);

nlohmann::json make_handshake(std::uint64_t id);
nlohmann::json make_fit(std::uint64_t id, const std::vector<std::string>& texts, const std::vector<Label>& labels);
nlohmann::json make_generate(std::uint64_t id, std::size_t n, std::size_t max_tokens, const DecodingParams& params);
nlohmann::json make_score(std::uint64_t id, const std::vector<std::string>& texts);
nlohmann::json make_result(std::uint64_t id);
nlohmann::json make_error(std::uint64_t id, const std::string& message);

struct ClientOptions {
    std::string name;
    std::vector<std::string> command;
    Timeouts timeouts;
};

/// Client side of the backend protocol. Owns one backend process and keeps
/// at most one request outstanding; not shareable across threads.
class Client {
public:
    explicit Client(ClientOptions options);

    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    const std::string& name() const { return options_.name; }

    /// Exchanges protocol versions; a mismatch is a VersionError.
    Capabilities handshake();

    void fit(const std::vector<std::string>& texts, const std::vector<Label>& labels);

    /// Requests n prompt-free sequences. Results are preprocessed client
    /// side; sequences longer than max_tokens are truncated with a warning.
    std::vector<Tokens> remote_generate(std::size_t n, std::size_t max_tokens, const DecodingParams& params = {});

    /// Hate-class probabilities, order-aligned with texts.
    std::vector<double> remote_score(const std::vector<std::string>& texts);

    bool handshake_done() const { return capabilities_.has_value(); }

private:
    nlohmann::json round_trip(nlohmann::json request, std::chrono::milliseconds timeout, bool allow_heartbeat);
    void require_handshake(std::string_view verb) const;

    ClientOptions options_;
    std::unique_ptr<Subprocess> process_;
    std::uint64_t next_id_ = 1;
    std::optional<Capabilities> capabilities_;
};

}  // namespace augforge::backend
