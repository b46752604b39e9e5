// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <sys/types.h>

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace augforge {

/// A child process whose stdin and stdout are pipes to the parent.
/// Lines written go to the child's stdin; lines read come from its stdout.
class Subprocess {
public:
    Subprocess(const std::vector<std::string>& argv,
               const std::vector<std::pair<std::string, std::string>>& extra_env = {});
    ~Subprocess();

    Subprocess(const Subprocess&) = delete;
    Subprocess& operator=(const Subprocess&) = delete;

    /// Writes line plus '\n'. Returns false if the child closed its stdin.
    bool write_line(const std::string& line);

    /// Reads the next line, waiting at most timeout. Returns nullopt on
    /// timeout; throws ProtocolError if the child closed its stdout.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

    /// Closes stdin and reaps the child, killing it if it lingers.
    void terminate();

    pid_t pid() const { return pid_; }

private:
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace augforge
