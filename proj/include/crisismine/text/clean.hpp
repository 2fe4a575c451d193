#pragma once

#include <cctype>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "crisismine/util/error.hpp"

namespace cm::text {

struct CleanOptions {
    // Ordered suffix list, each stripped at most once per token.
    std::vector<std::string> suffixes = {"ing", "ed", "ly", "es", "s"};
    std::size_t min_stem_len = 3;
};

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stopword file: " + path);
    std::unordered_set<std::string> out;
    std::string w;
    while (in >> w) out.insert(w);
    return out;
}

namespace detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Strip <...> tags and decode the common named/numeric entities. Unknown
// entities decode to a space so they cannot leak into tokens.
inline std::string strip_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '<') {
            std::size_t close = s.find('>', i);
            if (close == std::string::npos) break;
            i = close;
            out += ' ';
        } else if (c == '&') {
            std::size_t semi = s.find(';', i);
            if (semi != std::string::npos && semi - i <= 8) {
                std::string ent = s.substr(i + 1, semi - i - 1);
                if (ent == "amp") out += '&';
                else if (ent == "lt") out += '<';
                else if (ent == "gt") out += '>';
                else if (ent == "quot") out += '"';
                else if (ent == "apos" || ent == "#39") out += '\'';
                else if (ent == "nbsp") out += ' ';
                else if (!ent.empty() && ent[0] == '#') {
                    long code = 0;
                    try {
                        code = (ent[1] == 'x' || ent[1] == 'X')
                                   ? std::stol(ent.substr(2), nullptr, 16)
                                   : std::stol(ent.substr(1));
                    } catch (...) { code = -1; }
                    if (code >= 32 && code < 127) out += static_cast<char>(code);
                    else out += ' ';
                } else out += ' ';
                i = semi;
            } else {
                out += ' ';
            }
        } else {
            out += c;
        }
    }
    return out;
}

// Remove http(s)://... and www.... runs up to the next whitespace.
inline std::string strip_urls(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        bool url = false;
        if (s.compare(i, 7, "http://") == 0 || s.compare(i, 8, "https://") == 0)
            url = true;
        else if (s.compare(i, 4, "www.") == 0 &&
                 (i == 0 || is_space(s[i - 1])))
            url = true;
        if (url) {
            while (i < s.size() && !is_space(s[i])) ++i;
            out += ' ';
        } else {
            out += s[i++];
        }
    }
    return out;
}

inline std::string strip_mentions(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '@' && i + 1 < s.size() && !is_space(s[i + 1])) {
            ++i;
            while (i < s.size() && !is_space(s[i]) &&
                   (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
                ++i;
            out += ' ';
        } else {
            out += s[i++];
        }
    }
    return out;
}

}  // namespace detail

// One suffix stripped at most once; custom lists supported for testing.
inline std::string lemmatize(const std::string& token, const CleanOptions& opt) {
    for (const std::string& suf : opt.suffixes) {
        if (token.size() > suf.size() &&
            token.compare(token.size() - suf.size(), suf.size(), suf) == 0) {
            std::string stem = token.substr(0, token.size() - suf.size());
            if (stem.size() >= opt.min_stem_len) return stem;
        }
    }
    return token;
}

// Full cleaning pass. normalized_text is the noise-free lowercased string
// before stopword removal and lemmatization, so cleaning it again is a
// fixed point; tokens are the final analysis units.
inline std::pair<std::string, std::vector<std::string>> clean_text(
    const std::string& raw, const std::unordered_set<std::string>& stopwords,
    const CleanOptions& opt = {}) {
    std::string s = detail::strip_html(raw);
    s = detail::strip_urls(s);
    s = detail::strip_mentions(s);

    // Drop every byte outside Basic Latin (covers emoji and all other
    // multi-byte sequences), lowercase, map punctuation to space. Keeps
    // [a-z0-9'] only.
    std::string norm;
    norm.reserve(s.size());
    for (char ch : s) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (u >= 0x80) continue;
        char c = static_cast<char>(std::tolower(u));
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'')
            norm += c;
        else
            norm += ' ';
    }

    // collapse whitespace
    std::string collapsed;
    collapsed.reserve(norm.size());
    bool prev_space = true;
    for (char c : norm) {
        if (c == ' ') {
            if (!prev_space) collapsed += ' ';
            prev_space = true;
        } else {
            collapsed += c;
            prev_space = false;
        }
    }
    if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();

    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            if (!stopwords.count(word)) {
                std::string lemma = lemmatize(word, opt);
                if (!lemma.empty()) tokens.push_back(std::move(lemma));
            }
            word.clear();
        }
    };
    for (char c : collapsed) {
        if (c == ' ') flush();
        else word += c;
    }
    flush();
    return {collapsed, tokens};
}

}  // namespace cm::text
