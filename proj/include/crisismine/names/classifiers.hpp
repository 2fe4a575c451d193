#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/names/dataset.hpp"
#include "crisismine/names/features.hpp"
#include "crisismine/names/metrics.hpp"
#include "crisismine/util/error.hpp"
#include "crisismine/util/rng.hpp"

namespace cm::names {

enum class Algorithm { NaiveBayes, KNN, DecisionTree, RandomForest, LinearSVM };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::NaiveBayes: return "NaiveBayes";
        case Algorithm::KNN: return "KNN";
        case Algorithm::DecisionTree: return "DecisionTree";
        case Algorithm::RandomForest: return "RandomForest";
        case Algorithm::LinearSVM: return "LinearSVM";
    }
    return "?";
}

inline Algorithm algorithm_from_name(const std::string& s) {
    if (s == "NaiveBayes") return Algorithm::NaiveBayes;
    if (s == "KNN") return Algorithm::KNN;
    if (s == "DecisionTree") return Algorithm::DecisionTree;
    if (s == "RandomForest") return Algorithm::RandomForest;
    if (s == "LinearSVM") return Algorithm::LinearSVM;
    throw ConfigError("unknown classifier algorithm: " + s);
}

struct Hyperparams {
    double nb_alpha = 1.0;       // Laplace smoothing
    int knn_k = 5;
    int tree_max_depth = 12;
    int tree_min_leaf = 5;
    int forest_trees = 100;
    int forest_mtry = 5;         // floor(sqrt(26))
    bool forest_bootstrap = true;
    int svm_epochs = 10;
    double svm_lambda = 1e-4;
};

struct Prediction {
    int label = 0;
    double score = 0.0;
};

namespace detail {

struct TreeNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> class_counts;
};

struct Tree {
    std::vector<TreeNode> nodes;

    const TreeNode& descend(const LetterCounts& x) const {
        int n = 0;
        while (!nodes[n].leaf)
            n = (x[nodes[n].feature] <= nodes[n].threshold) ? nodes[n].left
                                                            : nodes[n].right;
        return nodes[n];
    }
};

inline double gini(const std::vector<double>& counts, double total) {
    if (total <= 0) return 0.0;
    double g = 1.0;
    for (double c : counts) {
        double p = c / total;
        g -= p * p;
    }
    return g;
}

// CART with Gini impurity. Feature subsampling (mtry < 26) serves the
// forest; the standalone tree scans all features.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<Example>& rows, std::size_t num_classes,
                const Hyperparams& hp, int mtry, Rng rng)
        : rows_(rows), num_classes_(num_classes), hp_(hp), mtry_(mtry), rng_(rng) {}

    Tree build(const std::vector<std::size_t>& indices) {
        Tree t;
        grow(t, indices, 0);
        return t;
    }

private:
    int grow(Tree& t, const std::vector<std::size_t>& idx, int depth) {
        int me = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        std::vector<double> counts(num_classes_, 0.0);
        for (std::size_t i : idx) counts[rows_[i].label] += 1.0;
        t.nodes[me].class_counts = counts;

        double total = static_cast<double>(idx.size());
        double impurity = gini(counts, total);
        if (depth >= hp_.tree_max_depth || impurity <= 0.0 ||
            idx.size() < 2 * static_cast<std::size_t>(hp_.tree_min_leaf)) {
            return me;
        }

        int best_f = -1;
        double best_thr = 0.0, best_score = impurity - 1e-12;
        std::vector<int> features = pick_features();
        for (int f : features) {
            // sweep sorted values accumulating left-side class counts
            std::vector<std::pair<int, int>> vals;  // (value, label)
            vals.reserve(idx.size());
            for (std::size_t i : idx) vals.push_back({rows_[i].x[f], rows_[i].label});
            std::sort(vals.begin(), vals.end());
            std::vector<double> left(num_classes_, 0.0);
            std::vector<double> right = counts;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left[vals[i].second] += 1.0;
                right[vals[i].second] -= 1.0;
                if (vals[i].first == vals[i + 1].first) continue;
                double nl = static_cast<double>(i + 1);
                double nr = total - nl;
                if (nl < hp_.tree_min_leaf || nr < hp_.tree_min_leaf) continue;
                double score = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                if (score < best_score) {
                    best_score = score;
                    best_f = f;
                    best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_f < 0) return me;

        std::vector<std::size_t> lidx, ridx;
        for (std::size_t i : idx)
            (rows_[i].x[best_f] <= best_thr ? lidx : ridx).push_back(i);
        t.nodes[me].leaf = false;
        t.nodes[me].feature = best_f;
        t.nodes[me].threshold = best_thr;
        int l = grow(t, lidx, depth + 1);
        int r = grow(t, ridx, depth + 1);
        t.nodes[me].left = l;
        t.nodes[me].right = r;
        return me;
    }

    std::vector<int> pick_features() {
        std::vector<int> all(26);
        std::iota(all.begin(), all.end(), 0);
        if (mtry_ >= 26) return all;
        rng_.shuffle(all);
        all.resize(mtry_);
        std::sort(all.begin(), all.end());
        return all;
    }

    const std::vector<Example>& rows_;
    std::size_t num_classes_;
    const Hyperparams& hp_;
    int mtry_;
    Rng rng_;
};

}  // namespace detail

class NameClassifier {
public:
    Algorithm algorithm = Algorithm::NaiveBayes;
    std::vector<std::string> classes;
    std::uint64_t train_seed = 0;
    Hyperparams hp;
    std::optional<double> oob_accuracy;

    // NaiveBayes
    std::vector<double> nb_log_prior;
    std::vector<std::vector<double>> nb_log_lik;  // [class][letter]
    // KNN
    std::vector<Example> knn_rows;
    // DecisionTree / RandomForest
    std::vector<detail::Tree> trees;
    // LinearSVM: per class, 26 weights + bias
    std::vector<std::vector<double>> svm_w;

    std::size_t num_classes() const { return classes.size(); }

    // Per-class internal scores; predict() is their argmax with the
    // smaller-index tie-break.
    std::vector<double> class_scores(const LetterCounts& x) const {
        switch (algorithm) {
            case Algorithm::NaiveBayes: return nb_scores(x);
            case Algorithm::KNN: return knn_scores(x);
            case Algorithm::DecisionTree: return tree_scores(x);
            case Algorithm::RandomForest: return forest_scores(x);
            case Algorithm::LinearSVM: return svm_scores(x);
        }
        throw ConfigError("unfitted classifier");
    }

    Prediction predict(const LetterCounts& x) const {
        std::vector<double> scores = class_scores(x);
        int best = 0;
        for (std::size_t c = 1; c < scores.size(); ++c)
            if (scores[c] > scores[best]) best = static_cast<int>(c);
        double conf = 0.0;
        switch (algorithm) {
            case Algorithm::NaiveBayes: {
                // scores are already posteriors
                conf = scores[best];
                break;
            }
            case Algorithm::KNN:
            case Algorithm::DecisionTree:
            case Algorithm::RandomForest:
                conf = scores[best];
                break;
            case Algorithm::LinearSVM:
                conf = 1.0 / (1.0 + std::exp(-scores[best]));
                break;
        }
        return {best, conf};
    }

    Prediction predict_name(const std::string& name) const {
        return predict(letter_counts(name));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = 1;
        j["algorithm"] = algorithm_name(algorithm);
        j["classes"] = classes;
        j["seed"] = train_seed;
        if (oob_accuracy) j["oob_accuracy"] = *oob_accuracy;
        nlohmann::json p;
        switch (algorithm) {
            case Algorithm::NaiveBayes:
                p["log_prior"] = nb_log_prior;
                p["log_lik"] = nb_log_lik;
                break;
            case Algorithm::KNN: {
                p["k"] = hp.knn_k;
                nlohmann::json rows = nlohmann::json::array();
                for (const auto& ex : knn_rows)
                    rows.push_back({{"x", ex.x}, {"y", ex.label}});
                p["rows"] = std::move(rows);
                break;
            }
            case Algorithm::DecisionTree:
            case Algorithm::RandomForest: {
                nlohmann::json jt = nlohmann::json::array();
                for (const auto& t : trees) {
                    nlohmann::json jn = nlohmann::json::array();
                    for (const auto& n : t.nodes)
                        jn.push_back({{"leaf", n.leaf},
                                      {"f", n.feature},
                                      {"thr", n.threshold},
                                      {"l", n.left},
                                      {"r", n.right},
                                      {"counts", n.class_counts}});
                    jt.push_back(std::move(jn));
                }
                p["trees"] = std::move(jt);
                break;
            }
            case Algorithm::LinearSVM:
                p["weights"] = svm_w;
                break;
        }
        j["parameters"] = std::move(p);
        return j;
    }

    static NameClassifier from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != 1)
            throw ConfigError("unsupported name-model file version");
        NameClassifier m;
        m.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.train_seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("oob_accuracy")) m.oob_accuracy = j["oob_accuracy"].get<double>();
        const auto& p = j.at("parameters");
        switch (m.algorithm) {
            case Algorithm::NaiveBayes:
                m.nb_log_prior = p.at("log_prior").get<std::vector<double>>();
                m.nb_log_lik = p.at("log_lik").get<std::vector<std::vector<double>>>();
                break;
            case Algorithm::KNN:
                m.hp.knn_k = p.at("k").get<int>();
                for (const auto& row : p.at("rows")) {
                    Example ex;
                    auto xs = row.at("x").get<std::vector<int>>();
                    std::copy(xs.begin(), xs.end(), ex.x.begin());
                    ex.label = row.at("y").get<int>();
                    m.knn_rows.push_back(ex);
                }
                break;
            case Algorithm::DecisionTree:
            case Algorithm::RandomForest:
                for (const auto& jt : p.at("trees")) {
                    detail::Tree t;
                    for (const auto& jn : jt) {
                        detail::TreeNode n;
                        n.leaf = jn.at("leaf").get<bool>();
                        n.feature = jn.at("f").get<int>();
                        n.threshold = jn.at("thr").get<double>();
                        n.left = jn.at("l").get<int>();
                        n.right = jn.at("r").get<int>();
                        n.class_counts = jn.at("counts").get<std::vector<double>>();
                        t.nodes.push_back(std::move(n));
                    }
                    m.trees.push_back(std::move(t));
                }
                break;
            case Algorithm::LinearSVM:
                m.svm_w = p.at("weights").get<std::vector<std::vector<double>>>();
                break;
        }
        return m;
    }

private:
    std::vector<double> nb_scores(const LetterCounts& x) const {
        std::vector<double> lg(num_classes());
        for (std::size_t c = 0; c < num_classes(); ++c) {
            double s = nb_log_prior[c];
            for (int f = 0; f < 26; ++f)
                if (x[f]) s += x[f] * nb_log_lik[c][f];
            lg[c] = s;
        }
        // posterior via stable softmax
        double mx = *std::max_element(lg.begin(), lg.end());
        double z = 0.0;
        for (double& v : lg) {
            v = std::exp(v - mx);
            z += v;
        }
        for (double& v : lg) v /= z;
        return lg;
    }

    std::vector<double> knn_scores(const LetterCounts& x) const {
        std::size_t k = std::min<std::size_t>(hp.knn_k, knn_rows.size());
        // (squared distance, row index); distance ties -> smaller row index
        std::vector<std::pair<long long, std::size_t>> d;
        d.reserve(knn_rows.size());
        for (std::size_t i = 0; i < knn_rows.size(); ++i) {
            long long s = 0;
            for (int f = 0; f < 26; ++f) {
                long long diff = x[f] - knn_rows[i].x[f];
                s += diff * diff;
            }
            d.push_back({s, i});
        }
        std::partial_sort(d.begin(), d.begin() + k, d.end());
        std::vector<double> votes(num_classes(), 0.0);
        for (std::size_t i = 0; i < k; ++i)
            votes[knn_rows[d[i].second].label] += 1.0;
        for (double& v : votes) v /= static_cast<double>(k);
        return votes;
    }

    std::vector<double> tree_scores(const LetterCounts& x) const {
        const auto& counts = trees[0].descend(x).class_counts;
        double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        std::vector<double> out(num_classes(), 0.0);
        for (std::size_t c = 0; c < num_classes(); ++c)
            out[c] = total > 0 ? counts[c] / total : 0.0;
        return out;
    }

    std::vector<double> forest_scores(const LetterCounts& x) const {
        std::vector<double> votes(num_classes(), 0.0);
        for (const auto& t : trees) {
            const auto& counts = t.descend(x).class_counts;
            int best = 0;
            for (std::size_t c = 1; c < counts.size(); ++c)
                if (counts[c] > counts[best]) best = static_cast<int>(c);
            votes[best] += 1.0;
        }
        for (double& v : votes) v /= static_cast<double>(trees.size());
        return votes;
    }

    std::vector<double> svm_scores(const LetterCounts& x) const {
        std::vector<double> margins(num_classes());
        for (std::size_t c = 0; c < num_classes(); ++c) {
            double m = svm_w[c][26];
            for (int f = 0; f < 26; ++f) m += svm_w[c][f] * x[f];
            margins[c] = m;
        }
        return margins;
    }
};

inline NameClassifier train(const NameDataset& ds, Algorithm algo,
                            const Hyperparams& hp, std::uint64_t seed) {
    if (ds.rows.empty()) throw DataError("empty training set");
    {
        int first = ds.rows[0].label;
        bool multi = false;
        for (const auto& ex : ds.rows)
            if (ex.label != first) { multi = true; break; }
        if (!multi) throw DataError("single-class training set; model would be degenerate");
    }

    NameClassifier m;
    m.algorithm = algo;
    m.classes = ds.classes;
    m.train_seed = seed;
    m.hp = hp;
    Rng rng(seed);
    std::size_t C = ds.classes.size();

    switch (algo) {
        case Algorithm::NaiveBayes: {
            std::vector<double> prior(C, 0.0);
            std::vector<std::vector<double>> letters(C, std::vector<double>(26, 0.0));
            std::vector<double> totals(C, 0.0);
            for (const auto& ex : ds.rows) {
                prior[ex.label] += 1.0;
                for (int f = 0; f < 26; ++f) {
                    letters[ex.label][f] += ex.x[f];
                    totals[ex.label] += ex.x[f];
                }
            }
            m.nb_log_prior.resize(C);
            m.nb_log_lik.assign(C, std::vector<double>(26));
            double n = static_cast<double>(ds.rows.size());
            for (std::size_t c = 0; c < C; ++c) {
                m.nb_log_prior[c] = std::log(std::max(prior[c], 1e-300) / n);
                for (int f = 0; f < 26; ++f)
                    m.nb_log_lik[c][f] = std::log((letters[c][f] + hp.nb_alpha) /
                                                  (totals[c] + 26.0 * hp.nb_alpha));
            }
            break;
        }
        case Algorithm::KNN:
            m.knn_rows = ds.rows;
            break;
        case Algorithm::DecisionTree: {
            detail::TreeBuilder b(ds.rows, C, hp, 26, rng.split(0));
            std::vector<std::size_t> all(ds.rows.size());
            std::iota(all.begin(), all.end(), 0);
            m.trees.push_back(b.build(all));
            break;
        }
        case Algorithm::RandomForest: {
            std::size_t n = ds.rows.size();
            // per-row OOB votes
            std::vector<std::vector<double>> oob_votes(n, std::vector<double>(C, 0.0));
            for (int t = 0; t < hp.forest_trees; ++t) {
                Rng trng = rng.split(static_cast<std::uint64_t>(t));
                std::vector<std::size_t> sample;
                std::vector<bool> in_bag(n, false);
                if (hp.forest_bootstrap) {
                    sample.reserve(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        std::size_t j = static_cast<std::size_t>(trng.below(n));
                        sample.push_back(j);
                        in_bag[j] = true;
                    }
                } else {
                    sample.resize(n);
                    std::iota(sample.begin(), sample.end(), 0);
                    std::fill(in_bag.begin(), in_bag.end(), true);
                }
                detail::TreeBuilder b(ds.rows, C, hp, hp.forest_mtry, trng.split(0xf0f0));
                detail::Tree tree = b.build(sample);
                if (hp.forest_bootstrap) {
                    for (std::size_t i = 0; i < n; ++i) {
                        if (in_bag[i]) continue;
                        const auto& counts = tree.descend(ds.rows[i].x).class_counts;
                        int best = 0;
                        for (std::size_t c = 1; c < counts.size(); ++c)
                            if (counts[c] > counts[best]) best = static_cast<int>(c);
                        oob_votes[i][best] += 1.0;
                    }
                }
                m.trees.push_back(std::move(tree));
            }
            if (hp.forest_bootstrap) {
                std::size_t voted = 0, correct = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    double total = std::accumulate(oob_votes[i].begin(), oob_votes[i].end(), 0.0);
                    if (total <= 0) continue;
                    ++voted;
                    int best = 0;
                    for (std::size_t c = 1; c < C; ++c)
                        if (oob_votes[i][c] > oob_votes[i][best]) best = static_cast<int>(c);
                    if (best == ds.rows[i].label) ++correct;
                }
                if (voted > 0)
                    m.oob_accuracy = static_cast<double>(correct) / static_cast<double>(voted);
            }
            break;
        }
        case Algorithm::LinearSVM: {
            // one-vs-rest Pegasos-style hinge SGD, fixed schedule
            m.svm_w.assign(C, std::vector<double>(27, 0.0));
            for (std::size_t c = 0; c < C; ++c) {
                auto& w = m.svm_w[c];
                std::size_t step = 0;
                for (int epoch = 0; epoch < hp.svm_epochs; ++epoch) {
                    std::vector<std::size_t> order(ds.rows.size());
                    std::iota(order.begin(), order.end(), 0);
                    Rng erng = rng.split(c * 1000 + epoch);
                    erng.shuffle(order);
                    for (std::size_t i : order) {
                        ++step;
                        double eta = 1.0 / (hp.svm_lambda * static_cast<double>(step + 100));
                        const auto& ex = ds.rows[i];
                        double y = ex.label == static_cast<int>(c) ? 1.0 : -1.0;
                        double margin = w[26];
                        for (int f = 0; f < 26; ++f) margin += w[f] * ex.x[f];
                        double decay = 1.0 - eta * hp.svm_lambda;
                        for (int f = 0; f < 26; ++f) w[f] *= decay;
                        if (y * margin < 1.0) {
                            for (int f = 0; f < 26; ++f) w[f] += eta * y * ex.x[f];
                            w[26] += eta * y;
                        }
                    }
                }
            }
            break;
        }
    }
    return m;
}

inline EvalReport evaluate(const NameClassifier& model, const NameDataset& test) {
    if (test.rows.empty()) throw DataError("empty test set");
    std::vector<int> actual, predicted;
    actual.reserve(test.rows.size());
    predicted.reserve(test.rows.size());
    for (const auto& ex : test.rows) {
        actual.push_back(ex.label);
        predicted.push_back(model.predict(ex.x).label);
    }
    EvalReport r = eval_from_predictions(actual, predicted, model.num_classes());
    r.oob_accuracy = model.oob_accuracy;
    return r;
}

struct CvSummary {
    std::vector<EvalReport> folds;
    double mean_accuracy = 0.0;
    double stdev_accuracy = 0.0;
};

inline CvSummary kfold_cv(const NameDataset& ds, Algorithm algo,
                          const Hyperparams& hp, int k, std::uint64_t seed) {
    std::vector<int> fold = kfold_assignments(ds, k, seed);
    CvSummary out;
    for (int f = 0; f < k; ++f) {
        NameDataset train_ds, val_ds;
        train_ds.classes = val_ds.classes = ds.classes;
        for (std::size_t i = 0; i < ds.rows.size(); ++i)
            (fold[i] == f ? val_ds : train_ds).rows.push_back(ds.rows[i]);
        NameClassifier model = train(train_ds, algo, hp, Rng(seed).split(2000 + f).next_u64());
        out.folds.push_back(evaluate(model, val_ds));
    }
    for (const auto& r : out.folds) out.mean_accuracy += r.accuracy;
    out.mean_accuracy /= static_cast<double>(k);
    for (const auto& r : out.folds) {
        double d = r.accuracy - out.mean_accuracy;
        out.stdev_accuracy += d * d;
    }
    out.stdev_accuracy = std::sqrt(out.stdev_accuracy / static_cast<double>(k));
    return out;
}

}  // namespace cm::names
