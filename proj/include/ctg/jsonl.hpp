// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ctg/errors.hpp"

namespace ctg::io {

using json = nlohmann::json;

/// Streams a newline-delimited file, calling fn(line_number, line) for every
/// non-empty line. Line numbers are 1-based for error reporting.
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(std::size_t, const std::string&)>& fn) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(line_no, line);
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoFailure("short write to " + path.string());
}

/// One JSON object per line. dump() with default settings keeps keys sorted,
/// which makes stage outputs byte-stable across runs.
class LineWriter {
  public:
    explicit LineWriter(const std::filesystem::path& path) : path_(path), out_(path) {
        if (!out_) throw IoFailure("cannot open " + path.string() + " for writing");
    }

    void write(const json& j) {
        out_ << j.dump() << '\n';
        if (!out_) throw IoFailure("short write to " + path_.string());
    }

    void write_raw(std::string_view line) {
        out_ << line << '\n';
        if (!out_) throw IoFailure("short write to " + path_.string());
    }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace ctg::io
