#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crisismine/util/error.hpp"

namespace cm::text {

// A rule is one keyword or a multi-word phrase matched against consecutive
// tokens, case-insensitive.
struct RelevanceRule {
    std::vector<std::string> words;
};

inline RelevanceRule make_rule(const std::string& phrase) {
    RelevanceRule r;
    std::istringstream is(phrase);
    std::string w;
    while (is >> w) {
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        r.words.push_back(w);
    }
    return r;
}

inline std::vector<RelevanceRule> load_rules(const std::vector<std::string>& phrases) {
    std::vector<RelevanceRule> out;
    for (const auto& p : phrases) {
        RelevanceRule r = make_rule(p);
        if (!r.words.empty()) out.push_back(std::move(r));
    }
    return out;
}

inline bool relevance_filter(const std::vector<std::string>& tokens,
                             const std::vector<RelevanceRule>& rules) {
    if (rules.empty()) throw DataError("relevance rule list is empty");
    for (const auto& rule : rules) {
        std::size_t n = rule.words.size();
        if (n == 0 || n > tokens.size()) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < n; ++j) {
                if (tokens[i + j] != rule.words[j]) { match = false; break; }
            }
            if (match) return true;
        }
    }
    return false;
}

}  // namespace cm::text
