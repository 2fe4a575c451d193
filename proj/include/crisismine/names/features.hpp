#pragma once

#include <array>
#include <cctype>
#include <string>

#include "crisismine/util/error.hpp"

namespace cm::names {

using LetterCounts = std::array<int, 26>;

// Lowercase, drop every non a-z character, count occurrences.
inline LetterCounts letter_counts(const std::string& name) {
    LetterCounts counts{};
    int total = 0;
    for (char ch : name) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (u >= 0x80) continue;
        char c = static_cast<char>(std::tolower(u));
        if (c >= 'a' && c <= 'z') {
            ++counts[c - 'a'];
            ++total;
        }
    }
    if (total == 0) throw DataError("name has no alphabetic characters: '" + name + "'");
    return counts;
}

struct Example {
    LetterCounts x{};
    int label = 0;  // index into the task's class set
};

}  // namespace cm::names
