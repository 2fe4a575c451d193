#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace cm::names {

// Per-class precision = TP/(TP+FP), recall = TP/(TP+FN),
// F1 = 2PR/(P+R); zero denominators yield 0.
inline double precision_from_counts(double tp, double fp) {
    double den = tp + fp;
    return den > 0 ? tp / den : 0.0;
}

inline double recall_from_counts(double tp, double fn) {
    double den = tp + fn;
    return den > 0 ? tp / den : 0.0;
}

inline double f1_score(double precision, double recall) {
    double den = precision + recall;
    return den > 0 ? 2.0 * precision * recall / den : 0.0;
}

struct EvalReport {
    std::size_t test_size = 0;
    double accuracy = 0.0;
    // confusion(actual, predicted)
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::size_t> support;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::optional<double> oob_accuracy;  // RandomForest only
};

// Build the full report from paired actual/predicted label indices.
inline EvalReport eval_from_predictions(const std::vector<int>& actual,
                                        const std::vector<int>& predicted,
                                        std::size_t num_classes) {
    EvalReport r;
    r.test_size = actual.size();
    r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        r.confusion[actual[i]][predicted[i]] += 1;
        if (actual[i] == predicted[i]) ++correct;
    }
    r.accuracy = actual.empty() ? 0.0 : static_cast<double>(correct) / actual.size();
    r.precision.resize(num_classes);
    r.recall.resize(num_classes);
    r.f1.resize(num_classes);
    r.support.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        double tp = static_cast<double>(r.confusion[c][c]);
        double fp = 0.0, fn = 0.0;
        for (std::size_t o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            fp += static_cast<double>(r.confusion[o][c]);
            fn += static_cast<double>(r.confusion[c][o]);
        }
        r.precision[c] = precision_from_counts(tp, fp);
        r.recall[c] = recall_from_counts(tp, fn);
        r.f1[c] = f1_score(r.precision[c], r.recall[c]);
        std::size_t sup = 0;
        for (std::size_t o = 0; o < num_classes; ++o) sup += r.confusion[c][o];
        r.support[c] = sup;
        r.macro_precision += r.precision[c];
        r.macro_recall += r.recall[c];
        r.macro_f1 += r.f1[c];
    }
    if (num_classes > 0) {
        r.macro_precision /= num_classes;
        r.macro_recall /= num_classes;
        r.macro_f1 /= num_classes;
    }
    return r;
}

}  // namespace cm::names
