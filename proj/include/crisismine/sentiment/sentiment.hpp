#pragma once

#include <array>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crisismine/labels.hpp"
#include "crisismine/util/csv.hpp"
#include "crisismine/util/error.hpp"

namespace cm::sentiment {

enum class SentimentClass : int { Negative = 0, Neutral = 1, Positive = 2 };

inline const char* to_string(SentimentClass c) {
    switch (c) {
        case SentimentClass::Negative: return "negative";
        case SentimentClass::Neutral: return "neutral";
        case SentimentClass::Positive: return "positive";
    }
    return "?";
}

struct Lexicon {
    std::unordered_map<std::string, double> weights;
    std::unordered_set<std::string> negators;
    double tau_pos = 0.5;
    double tau_neg = -0.5;

    void validate() const {
        if (!(tau_neg < 0.0 && tau_pos > 0.0))
            throw ConfigError("sentiment thresholds must satisfy tau_neg < 0 < tau_pos");
        for (const auto& [w, v] : weights)
            if (!std::isfinite(v)) throw DataError("non-finite lexicon weight for: " + w);
    }
};

inline Lexicon load_lexicon(const std::string& path,
                            const std::vector<std::string>& negators,
                            double tau_pos = 0.5, double tau_neg = -0.5) {
    Lexicon lex;
    lex.tau_pos = tau_pos;
    lex.tau_neg = tau_neg;
    auto rows = csv::read_file(path, "word,weight");
    for (const auto& row : rows) {
        if (row.size() != 2) throw DataError("lexicon row has wrong field count");
        lex.weights[row[0]] = std::stod(row[1]);
    }
    for (const auto& n : negators) lex.negators.insert(n);
    lex.validate();
    return lex;
}

struct SentimentScore {
    double raw = 0.0;
    SentimentClass cls = SentimentClass::Neutral;
};

// Sum of token weights; a weight's sign flips when the immediately
// preceding token is a negator.
inline SentimentScore score_post(const std::vector<std::string>& tokens,
                                 const Lexicon& lex) {
    double raw = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = lex.weights.find(tokens[i]);
        if (it == lex.weights.end()) continue;
        double w = it->second;
        if (i > 0 && lex.negators.count(tokens[i - 1])) w = -w;
        raw += w;
    }
    SentimentScore s;
    s.raw = raw;
    if (raw > lex.tau_pos) s.cls = SentimentClass::Positive;
    else if (raw < lex.tau_neg) s.cls = SentimentClass::Negative;
    else s.cls = SentimentClass::Neutral;
    return s;
}

// 8 activity categories x {negative, neutral, positive}
struct CategorySentimentMatrix {
    std::array<std::array<std::size_t, 3>, 8> counts{};

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts)
            for (std::size_t v : row) t += v;
        return t;
    }

    std::size_t row_total(int category) const {
        std::size_t t = 0;
        for (std::size_t v : counts[category]) t += v;
        return t;
    }
};

inline CategorySentimentMatrix aggregate_matrix(
    const std::vector<std::pair<ActivityLabel, SentimentClass>>& posts) {
    CategorySentimentMatrix m;
    for (const auto& [label, cls] : posts)
        m.counts[static_cast<int>(label)][static_cast<int>(cls)] += 1;
    return m;
}

inline std::string matrix_csv(const CategorySentimentMatrix& m) {
    std::string out = "label,negative,neutral,positive\n";
    for (int c = 0; c < kNumActivityLabels; ++c) {
        out += activity_label_names()[c];
        for (int s = 0; s < 3; ++s) out += "," + std::to_string(m.counts[c][s]);
        out += "\n";
    }
    return out;
}

}  // namespace cm::sentiment
