// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

// Porter's 1980 suffix-stripping algorithm, steps 1a through 5b, as published.
// Within a step the longest matching suffix wins; if its condition fails no
// other suffix of that step is tried. Words of length <= 2 pass through.
namespace ctg::porter {

namespace detail {

class Stemmer {
  public:
    explicit Stemmer(std::string_view word) : b_(word) {}

    std::string run() {
        if (b_.size() <= 2) return b_;
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5a();
        step5b();
        return b_;
    }

  private:
    std::string b_;
    std::size_t j_ = 0;  // stem length for the currently matched suffix

    // A consonant is a letter other than a,e,i,o,u, and other than y
    // preceded by a consonant.
    bool is_consonant(std::size_t i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !is_consonant(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in b_[0, limit).
    std::size_t measure(std::size_t limit) const {
        std::size_t m = 0;
        std::size_t i = 0;
        while (i < limit && is_consonant(i)) ++i;
        for (;;) {
            while (i < limit && !is_consonant(i)) ++i;
            if (i >= limit) return m;
            ++m;
            while (i < limit && is_consonant(i)) ++i;
            if (i >= limit) return m;
        }
    }

    std::size_t m() const { return measure(j_); }

    bool has_vowel(std::size_t limit) const {
        for (std::size_t i = 0; i < limit; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    // *d: word ends with a double consonant.
    bool double_consonant() const {
        std::size_t n = b_.size();
        return n >= 2 && b_[n - 1] == b_[n - 2] && is_consonant(n - 1);
    }

    // *o over b_[0, limit): ends cvc where the final c is not w, x or y.
    bool cvc(std::size_t limit) const {
        if (limit < 3) return false;
        if (!is_consonant(limit - 3) || is_consonant(limit - 2) || !is_consonant(limit - 1)) {
            return false;
        }
        char c = b_[limit - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view suffix) {
        if (suffix.size() >= b_.size()) return false;
        if (b_.compare(b_.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
        j_ = b_.size() - suffix.size();
        return true;
    }

    void set_suffix(std::string_view s) {
        b_.resize(j_);
        b_.append(s);
    }

    void truncate_to_stem() { b_.resize(j_); }

    // (m > condition_m) S1 -> S2 over an ordered rule list; the first
    // (longest-listed) matching S1 decides the step.
    struct Rule {
        std::string_view s1;
        std::string_view s2;
    };

    template <std::size_t N>
    void apply_rules(const Rule (&rules)[N], std::size_t min_m) {
        for (const Rule& r : rules) {
            if (ends(r.s1)) {
                if (m() > min_m) set_suffix(r.s2);
                return;
            }
        }
    }

    void step1a() {
        if (ends("sses")) {
            set_suffix("ss");
        } else if (ends("ies")) {
            set_suffix("i");
        } else if (ends("ss")) {
            // unchanged
        } else if (ends("s")) {
            truncate_to_stem();
        }
    }

    void step1b() {
        if (ends("eed")) {
            if (m() > 0) set_suffix("ee");
            return;
        }
        bool stripped = false;
        if (ends("ed") && has_vowel(j_)) {
            truncate_to_stem();
            stripped = true;
        } else if (ends("ing") && has_vowel(j_)) {
            truncate_to_stem();
            stripped = true;
        }
        if (!stripped) return;
        if (ends("at") || ends("bl") || ends("iz")) {
            b_.push_back('e');
        } else if (double_consonant()) {
            char c = b_.back();
            if (c != 'l' && c != 's' && c != 'z') b_.pop_back();
        } else if (measure(b_.size()) == 1 && cvc(b_.size())) {
            b_.push_back('e');
        }
    }

    void step1c() {
        if (ends("y") && has_vowel(j_)) b_.back() = 'i';
    }

    void step2() {
        static constexpr Rule rules[] = {
            {"ational", "ate"}, {"ization", "ize"}, {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"tional", "tion"}, {"biliti", "ble"},  {"entli", "ent"},
            {"ousli", "ous"},   {"ation", "ate"},   {"alism", "al"},    {"aliti", "al"},
            {"iviti", "ive"},   {"enci", "ence"},   {"anci", "ance"},   {"izer", "ize"},
            {"abli", "able"},   {"alli", "al"},     {"ator", "ate"},    {"eli", "e"},
        };
        apply_rules(rules, 0);
    }

    void step3() {
        static constexpr Rule rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ness", ""},  {"ful", ""},
        };
        apply_rules(rules, 0);
    }

    void step4() {
        static constexpr Rule rules[] = {
            {"ement", ""}, {"ance", ""}, {"ence", ""}, {"able", ""}, {"ible", ""},
            {"ment", ""},  {"ant", ""},  {"ent", ""},  {"ism", ""},  {"ate", ""},
            {"iti", ""},   {"ous", ""},  {"ive", ""},  {"ize", ""},  {"al", ""},
            {"er", ""},    {"ic", ""},   {"ou", ""},
        };
        if (ends("ion")) {
            if (m() > 1 && j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't')) truncate_to_stem();
            return;
        }
        apply_rules(rules, 1);
    }

    void step5a() {
        if (!ends("e")) return;
        std::size_t mm = m();
        if (mm > 1 || (mm == 1 && !cvc(j_))) truncate_to_stem();
    }

    void step5b() {
        if (measure(b_.size()) > 1 && double_consonant() && b_.back() == 'l') b_.pop_back();
    }
};

}  // namespace detail

/// Stems one lowercase token.
inline std::string stem(std::string_view token) {
    return detail::Stemmer(token).run();
}

}  // namespace ctg::porter
