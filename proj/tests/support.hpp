// SPDX-FileCopyrightText: (c) 2026 The augforge authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "augforge/corpus.hpp"
#include "augforge/types.hpp"

namespace augforge::test {

inline std::filesystem::path source_dir() { return AUGFORGE_SOURCE_DIR; }
inline std::filesystem::path backend_binary() { return AUGFORGE_BACKEND_BINARY; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("augforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline LabeledExample example(const std::string& text, Label label, const std::string& source = "t",
                              std::uint64_t index = 0) {
    LabeledExample ex;
    ex.id = {source, index};
    ex.text = text;
    ex.tokens = corpus::preprocess(text);
    ex.label = label;
    ex.source_dataset = source;
    return ex;
}

/// n examples with distinct ids; the first `hate` are hate.
inline Examples labeled_set(std::size_t n, std::size_t hate, const std::string& source = "t") {
    Examples out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(example("doc " + std::to_string(i), i < hate ? Label::hate : Label::non_hate, source, i));
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace augforge::test
