// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <chrono>

#include "augforge/backend_protocol.hpp"
#include "augforge/error.hpp"
#include "support.hpp"

using namespace augforge;
using namespace augforge::backend;
using namespace std::chrono_literals;

namespace {

Client server(const std::string& fault = "none", std::vector<std::string> extra = {}, Timeouts t = {}) {
    std::vector<std::string> cmd = {test::backend_binary().string(), "--fault", fault, "--epochs", "30"};
    cmd.insert(cmd.end(), extra.begin(), extra.end());
    return Client({"ref", cmd, t});
}

const std::vector<std::string> kTexts = {"vile bad words", "bad vile", "nice day", "kind words here"};
const std::vector<Label> kLabels = {Label::hate, Label::hate, Label::non_hate, Label::non_hate};
const std::vector<std::string> kHateTexts = {"they are vile", "vile and bad", "so bad"};
const std::vector<Label> kHateLabels(3, Label::hate);

}  // namespace

TEST_SUITE("backend_protocol") {
    TEST_CASE("messages encode to one line and decode back") {
        const auto fit = make_fit(3, {"a \"quoted\"\nline"}, {Label::hate});
        const auto line = encode(fit);
        CHECK(line.find('\n') == std::string::npos);
        CHECK(decode(line) == fit);
        CHECK(fit["kind"] == "fit");
        CHECK(fit["labels"][0] == "hate");
        DecodingParams p;
        p.top_k = 5;
        const auto gen = make_generate(4, 10, 30, p);
        CHECK(gen["top_k"] == 5);
        CHECK(!gen.contains("top_p"));
        CHECK(make_error(2, "x")["message"] == "x");
        CHECK_THROWS_AS(decode("not json"), ProtocolError);
        CHECK_THROWS_AS(decode("[1,2]"), ProtocolError);
        CHECK_THROWS_AS(decode(R"({"kind":"result"})"), ProtocolError);
        CHECK_THROWS_AS(parse_kind("shout"), ProtocolError);
        for (auto k : {MessageKind::handshake, MessageKind::heartbeat, MessageKind::error})
            CHECK(parse_kind(to_string(k)) == k);
        CHECK_THROWS_AS(make_fit(1, {"a"}, {}), PreconditionError);
    }

    TEST_CASE("handshake, fit, score and generate against the reference server") {
        auto c = server();
        CHECK_THROWS_AS(c.fit(kTexts, kLabels), ProtocolError);
        const auto caps = c.handshake();
        CHECK(caps.version == kProtocolVersion);
        CHECK(caps.verbs == std::vector<std::string>{"fit", "generate", "score"});
        c.fit(kTexts, kLabels);
        const auto scores = c.remote_score({"vile bad", "nice kind"});
        REQUIRE(scores.size() == 2);
        CHECK(scores[0] > scores[1]);
        CHECK(c.remote_score({}).empty());
        CHECK_THROWS_AS(c.remote_generate(3, 10), BackendError);

        c.fit(kHateTexts, kHateLabels);
        const auto seqs = c.remote_generate(20, 12);
        REQUIRE(seqs.size() == 20);
        for (const auto& s : seqs) CHECK(s.size() <= 12);
        CHECK(c.remote_generate(0, 12).empty());
    }

    TEST_CASE("version mismatch is rejected") {
        auto c = server("version2");
        CHECK_THROWS_AS(c.handshake(), VersionError);
        CHECK(!c.handshake_done());
    }

    TEST_CASE("a silent fit times out") {
        Timeouts t;
        t.fit_silence = 300ms;
        auto c = server("silent", {}, t);
        c.handshake();
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(c.fit(kTexts, kLabels), TimeoutError);
        CHECK(std::chrono::steady_clock::now() - start < 5s);
    }

    TEST_CASE("heartbeats keep a long fit alive") {
        Timeouts t;
        t.fit_silence = 400ms;
        auto c = server("heartbeat", {"--heartbeats", "4", "--heartbeat-ms", "150"}, t);
        c.handshake();
        CHECK_NOTHROW(c.fit(kTexts, kLabels));
        CHECK(c.remote_score({"vile"}).size() == 1);
    }

    TEST_CASE("short responses are protocol errors") {
        auto c = server("short");
        c.handshake();
        c.fit(kTexts, kLabels);
        CHECK_THROWS_WITH_AS(c.remote_score({"a", "b"}), doctest::Contains("1 scores for 2"), ProtocolError);
        auto g = server("short");
        g.handshake();
        g.fit(kHateTexts, kHateLabels);
        CHECK_THROWS_WITH_AS(g.remote_generate(5, 10), doctest::Contains("4 sequences"), ProtocolError);
    }

    TEST_CASE("scores outside the unit interval are rejected") {
        auto c = server("badscore");
        c.handshake();
        c.fit(kTexts, kLabels);
        CHECK_THROWS_WITH_AS(c.remote_score({"a"}), doctest::Contains("outside [0,1]"), ProtocolError);
    }

    TEST_CASE("over-long sequences are truncated") {
        auto c = server("overlong");
        c.handshake();
        c.fit(kHateTexts, kHateLabels);
        for (const auto& s : c.remote_generate(5, 8)) CHECK(s.size() == 8);
    }

    TEST_CASE("backend errors pass through") {
        auto c = server("error");
        c.handshake();
        CHECK_THROWS_WITH_AS(c.fit(kTexts, kLabels), doctest::Contains("injected fit failure"), BackendError);
    }

    TEST_CASE("mismatched ids are rejected") {
        auto c = server("wrongid");
        c.handshake();
        CHECK_THROWS_WITH_AS(c.fit(kTexts, kLabels), doctest::Contains("answered id"), ProtocolError);
    }

    TEST_CASE("a crashed backend is reported") {
        Timeouts t;
        t.fit_silence = 2s;
        auto c = server("crash", {}, t);
        c.handshake();
        CHECK_THROWS_AS(c.fit(kTexts, kLabels), ProtocolError);
    }

    TEST_CASE("non-protocol output is rejected") {
        auto c = server("garbage");
        c.handshake();
        CHECK_THROWS_AS(c.fit(kTexts, kLabels), ProtocolError);
    }

    TEST_CASE("a missing executable fails at handshake") {
        Timeouts t;
        t.handshake = 2s;
        Client c({"missing", {"/nonexistent/backend"}, t});
        CHECK_THROWS_AS(c.handshake(), ProtocolError);
    }
}
