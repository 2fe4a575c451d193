#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "crisismine/util/error.hpp"

namespace cm::encoder {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;

struct Vocabulary {
    std::vector<std::string> entries;  // index = token id
    std::unordered_map<std::string, int> index;

    void rebuild_index() {
        index.clear();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!index.emplace(entries[i], static_cast<int>(i)).second)
                throw DataError("duplicate vocabulary entry: " + entries[i]);
        }
    }

    int lookup(const std::string& piece) const {
        auto it = index.find(piece);
        return it == index.end() ? -1 : it->second;
    }

    std::size_t size() const { return entries.size(); }
};

// Greedy frequency-based pair merging over word-piece sequences, emitting
// "##" continuation pieces. Ties break on the lexicographically smallest
// pair so rebuilds are identical.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                              std::size_t target_size) {
    if (corpus.empty()) throw DataError("empty corpus for vocabulary construction");

    std::map<std::string, long long> word_freq;
    for (const auto& doc : corpus)
        for (const auto& w : doc)
            if (!w.empty()) ++word_freq[w];
    if (word_freq.empty()) throw DataError("corpus has no words");

    // split each word into single-character pieces
    std::vector<std::pair<std::vector<std::string>, long long>> words;
    std::map<std::string, bool> base_pieces;
    for (const auto& [w, freq] : word_freq) {
        std::vector<std::string> pieces;
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::string p = (i == 0 ? "" : "##") + std::string(1, w[i]);
            pieces.push_back(p);
            base_pieces[p] = true;
        }
        words.push_back({std::move(pieces), freq});
    }

    Vocabulary vocab;
    vocab.entries = {"[PAD]", "[UNK]", "[CLS]"};
    for (const auto& [p, _] : base_pieces) vocab.entries.push_back(p);
    if (vocab.entries.size() > target_size)
        throw ConfigError("vocabulary target_size too small for reserved tokens plus alphabet");

    while (vocab.entries.size() < target_size) {
        std::map<std::pair<std::string, std::string>, long long> pair_freq;
        for (const auto& [pieces, freq] : words)
            for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
                pair_freq[{pieces[i], pieces[i + 1]}] += freq;
        if (pair_freq.empty()) break;
        auto best = pair_freq.begin();
        for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it)
            if (it->second > best->second) best = it;  // tie keeps smaller pair (map order)
        if (best->second < 1) break;
        const auto& [left, right] = best->first;
        std::string merged = left + right.substr(2);  // strip the "##" of the right piece
        for (auto& [pieces, freq] : words) {
            for (std::size_t i = 0; i + 1 < pieces.size();) {
                if (pieces[i] == left && pieces[i + 1] == right) {
                    pieces[i] = merged;
                    pieces.erase(pieces.begin() + static_cast<long>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
        // the merged symbol may already exist when two merge paths collide
        bool known = std::find(vocab.entries.begin(), vocab.entries.end(), merged) !=
                     vocab.entries.end();
        if (!known) vocab.entries.push_back(merged);
    }

    vocab.rebuild_index();
    return vocab;
}

}  // namespace cm::encoder
