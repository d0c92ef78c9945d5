// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Character offsets throughout the pipeline are counted in Unicode scalar
// values, never bytes. Inputs have already been validated as UTF-8 by the
// JSON layer, so these helpers only need to walk lead bytes.
namespace ctg::utf8 {

inline bool is_continuation(unsigned char b) {
    return (b & 0xC0) == 0x80;
}

/// Number of Unicode scalar values in a UTF-8 string.
inline std::size_t length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if (!is_continuation(c)) ++n;
    }
    return n;
}

/// Byte offset of the scalar value at `char_pos`; returns s.size() when
/// char_pos equals length(s). Throws std::out_of_range past the end.
inline std::size_t byte_offset(std::string_view s, std::size_t char_pos) {
    std::size_t chars = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) {
            if (chars == char_pos) return i;
            ++chars;
        }
    }
    if (chars == char_pos) return s.size();
    throw std::out_of_range("utf8::byte_offset: char_pos past end of string");
}

/// Substring over the half-open character range [char_start, char_end).
inline std::string_view substr(std::string_view s, std::size_t char_start, std::size_t char_end) {
    std::size_t b0 = byte_offset(s, char_start);
    std::size_t b1 = byte_offset(s, char_end);
    return s.substr(b0, b1 - b0);
}

/// Byte offset of every scalar value, with s.size() appended as a sentinel.
/// Character i occupies the byte range [starts[i], starts[i+1]).
inline std::vector<std::size_t> char_starts(std::string_view s) {
    std::vector<std::size_t> starts;
    starts.reserve(s.size() + 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) starts.push_back(i);
    }
    starts.push_back(s.size());
    return starts;
}

}  // namespace ctg::utf8
