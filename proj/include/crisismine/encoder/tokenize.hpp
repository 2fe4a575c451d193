#pragma once

#include <string>
#include <vector>

#include "crisismine/encoder/vocab.hpp"
#include "crisismine/util/error.hpp"

namespace cm::encoder {

struct TokenSequence {
    std::vector<int> ids;             // length max_len, ids[0] = [CLS]
    std::vector<int> attention_mask;  // 1 for real tokens, 0 for padding
    std::vector<int> segment_ids;     // all zeros (single segment)
};

// Greedy longest-match from the left; a word with no matching prefix piece
// collapses to a single [UNK].
inline std::vector<int> wordpiece_ids(const std::string& word, const Vocabulary& vocab) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start < word.size()) {
        std::size_t end = word.size();
        int id = -1;
        while (end > start) {
            std::string piece = (start > 0 ? "##" : "") + word.substr(start, end - start);
            id = vocab.lookup(piece);
            if (id >= 0) break;
            --end;
        }
        if (id < 0) return {kUnkId};
        out.push_back(id);
        start = end;
    }
    return out;
}

inline TokenSequence tokenize(const std::vector<std::string>& words,
                              const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
    TokenSequence seq;
    seq.ids.push_back(kClsId);
    for (const auto& w : words) {
        if (seq.ids.size() >= max_len) break;
        for (int id : wordpiece_ids(w, vocab)) {
            if (seq.ids.size() >= max_len) break;
            seq.ids.push_back(id);
        }
    }
    seq.attention_mask.assign(seq.ids.size(), 1);
    while (seq.ids.size() < max_len) {
        seq.ids.push_back(kPadId);
        seq.attention_mask.push_back(0);
    }
    seq.segment_ids.assign(max_len, 0);
    return seq;
}

}  // namespace cm::encoder
