// Acceptance gate: nine numbered criteria, each reported PASS/FAIL on its
// own line in addition to the usual test summary.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/encoder/model.hpp"
#include "crisismine/encoder/tokenize.hpp"
#include "crisismine/encoder/vocab.hpp"
#include "crisismine/mnl/model.hpp"
#include "crisismine/names/classifiers.hpp"
#include "crisismine/names/dataset.hpp"
#include "crisismine/names/metrics.hpp"
#include "crisismine/util/digest.hpp"
#include "crisismine/util/matrix.hpp"
#include "crisismine/util/rng.hpp"

namespace {

namespace fs = std::filesystem;
using cm::Matrix;
using cm::Rng;

struct Banner {
    int n;
    explicit Banner(int criterion) : n(criterion) {}
    ~Banner() {
        std::printf("[criterion %d] %s\n", n,
                    ::testing::Test::HasFailure() ? "FAIL" : "PASS");
        std::fflush(stdout);
    }
};

const std::string kFixtures = CM_FIXTURE_DIR;

// ---- 1: fit-statistic fixture ----------------------------------------------

TEST(Criterion1, RhoSquaredFixture) {
    Banner b(1);
    double rho = cm::mnl::rho_squared(-16007.199, -21330.896);
    EXPECT_NEAR(rho, 0.2496, 0.0005);
    EXPECT_DOUBLE_EQ(std::round(rho * 1000.0) / 1000.0, 0.250);
}

// ---- 2: null-model identity ------------------------------------------------

TEST(Criterion2, NullLoglikelihoodIdentity) {
    Banner b(2);
    double ll0 = cm::mnl::null_log_likelihood(10258, 8);
    EXPECT_NEAR(ll0, -21330.896, 0.02);
}

// ---- 3: MNL recovery on a full-shape specification -------------------------

std::vector<std::map<std::string, double>> covariate_rows(std::size_t n,
                                                          std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::map<std::string, double>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::map<std::string, double> a;
        a["female"] = rng.below(2) ? 1.0 : 0.0;
        std::uint64_t race = rng.below(4);
        a["race_asian"] = race == 0 ? 1.0 : 0.0;
        a["race_black"] = race == 1 ? 1.0 : 0.0;
        a["race_hispanic"] = race == 2 ? 1.0 : 0.0;
        a["low_inc_non_ed"] = rng.below(10) < 3 ? 1.0 : 0.0;
        rows.push_back(std::move(a));
    }
    return rows;
}

TEST(Criterion3, SimulateAndRecover) {
    Banner b(3);
    cm::mnl::UtilitySpec spec = cm::mnl::load_spec(kFixtures + "/mnl_spec.json");
    ASSERT_EQ(spec.num_params, 20);

    std::vector<double> beta_true = {
        0.30, -0.20, 0.50, -0.40, 0.10,  0.25, -0.10,         // ASCs
        0.20, -0.30, 0.15, 0.35,  -0.25, 0.10,                // female
        -0.20, 0.30, 0.25,                                    // race_asian
        0.15, -0.35,                                          // race_hispanic
        0.40,                                                 // race_black
        -0.30};                                               // tied low-income term
    auto data = cm::mnl::simulate(spec, beta_true, covariate_rows(50000, 99), 424242);

    cm::mnl::EstimateSettings settings;
    settings.max_iter = 25;
    auto est = cm::mnl::estimate(spec, data, settings);
    ASSERT_TRUE(est.converged);
    EXPECT_LE(est.iterations, 25);
    for (int q = 0; q < spec.num_params; ++q)
        EXPECT_LT(std::abs(est.beta[q] - beta_true[q]), 3.0 * est.std_errors[q])
            << "parameter " << q;

    // derivative checks on a 500-row subset away from the optimum
    std::vector<cm::mnl::ChoiceObservation> sub(data.begin(), data.begin() + 500);
    std::vector<double> beta_probe(20, 0.0);
    Rng rng(7);
    for (double& v : beta_probe) v = -0.5 + rng.uniform();

    auto g = cm::mnl::gradient(spec, beta_probe, sub);
    const double h = 1e-5;
    double gworst = 0.0;
    for (int q = 0; q < 20; ++q) {
        std::vector<double> bp = beta_probe, bm = beta_probe;
        bp[q] += h;
        bm[q] -= h;
        double fd = (cm::mnl::log_likelihood(spec, bp, sub) -
                     cm::mnl::log_likelihood(spec, bm, sub)) /
                    (2.0 * h);
        gworst = std::max(gworst, std::abs(fd - g[q]) / std::max(1.0, std::abs(g[q])));
    }
    EXPECT_LT(gworst, 1e-6);

    auto hess = cm::mnl::hessian(spec, beta_probe, sub);
    double hworst = 0.0;
    for (int q = 0; q < 20; ++q) {
        std::vector<double> bp = beta_probe, bm = beta_probe;
        bp[q] += h;
        bm[q] -= h;
        auto gp = cm::mnl::gradient(spec, bp, sub);
        auto gm = cm::mnl::gradient(spec, bm, sub);
        for (int r = 0; r < 20; ++r) {
            double fd = (gp[r] - gm[r]) / (2.0 * h);
            hworst = std::max(hworst, std::abs(fd - hess[q * 20 + r]) /
                                          std::max(1.0, std::abs(hess[q * 20 + r])));
        }
    }
    EXPECT_LT(hworst, 1e-4);
}

// ---- 4: ASC share-matching -------------------------------------------------

TEST(Criterion4, AscOnlySharesMatch) {
    Banner b(4);
    {
        cm::mnl::UtilitySpec spec;
        spec.alternative_names = {"A", "B"};
        spec.reference = 0;
        spec.terms = {{cm::mnl::kAscVariable, {1}, 0}};
        spec.num_params = 1;
        std::vector<cm::mnl::ChoiceObservation> data;
        for (int i = 0; i < 100; ++i) {
            cm::mnl::ChoiceObservation o;
            o.chosen = i < 25 ? 0 : 1;  // 25/75
            data.push_back(o);
        }
        auto est = cm::mnl::estimate(spec, data, {});
        ASSERT_TRUE(est.converged);
        EXPECT_NEAR(est.beta[0], std::log(3.0), 1e-4);
        auto p = cm::mnl::probabilities(spec, est.beta, data[0]);
        EXPECT_NEAR(p[0], 0.25, 1e-8);
        EXPECT_NEAR(p[1], 0.75, 1e-8);
    }
    // arbitrary ASC-only specs reproduce empirical shares
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        int m = 3 + static_cast<int>(rng.below(3));
        cm::mnl::UtilitySpec spec;
        for (int a = 0; a < m; ++a) spec.alternative_names.push_back("alt" + std::to_string(a));
        spec.reference = 0;
        for (int a = 1; a < m; ++a)
            spec.terms.push_back({cm::mnl::kAscVariable, {a}, a - 1});
        spec.num_params = m - 1;

        std::vector<int> counts(m);
        int n = 0;
        for (int a = 0; a < m; ++a) {
            counts[a] = 20 + static_cast<int>(rng.below(80));
            n += counts[a];
        }
        std::vector<cm::mnl::ChoiceObservation> data;
        for (int a = 0; a < m; ++a)
            for (int i = 0; i < counts[a]; ++i) {
                cm::mnl::ChoiceObservation o;
                o.chosen = a;
                data.push_back(o);
            }
        auto est = cm::mnl::estimate(spec, data, {});
        ASSERT_TRUE(est.converged);
        auto p = cm::mnl::probabilities(spec, est.beta, data[0]);
        for (int a = 0; a < m; ++a)
            EXPECT_NEAR(p[a], static_cast<double>(counts[a]) / n, 1e-8) << trial;
    }
}

// ---- 5: attention correctness ----------------------------------------------

TEST(Criterion5, AttentionOracleAndProperties) {
    Banner b(5);
    // n=2, d_k=1: q=(1,0), k=(1,0), v=(2,4)
    Matrix q(2, 1), k(2, 1), v(2, 1);
    q(0, 0) = 1.0;
    q(1, 0) = 0.0;
    k(0, 0) = 1.0;
    k(1, 0) = 0.0;
    v(0, 0) = 2.0;
    v(1, 0) = 4.0;
    Matrix w;
    Matrix out = cm::encoder::attention(q, k, v, {1, 1}, &w);
    EXPECT_NEAR(w(0, 0), 0.7311, 1e-4);
    EXPECT_NEAR(w(0, 1), 0.2689, 1e-4);
    EXPECT_NEAR(out(0, 0), 2.5378, 1e-4);

    Rng rng(500);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(5);
        std::size_t d = 1 + rng.below(4);
        Matrix rq(n, d), rk(n, d), rv(n, d);
        for (std::size_t i = 0; i < n * d; ++i) {
            rq.data()[i] = -2.0 + 4.0 * rng.uniform();
            rk.data()[i] = -2.0 + 4.0 * rng.uniform();
            rv.data()[i] = -2.0 + 4.0 * rng.uniform();
        }
        std::vector<int> mask(n, 0);
        mask[rng.below(n)] = 1;
        for (std::size_t j = 0; j < n; ++j)
            if (rng.below(2)) mask[j] = 1;

        Matrix rw;
        Matrix o1 = cm::encoder::attention(rq, rk, rv, mask, &rw);

        // rows normalize over unmasked keys only
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                ASSERT_GE(rw(i, j), 0.0);
                if (!mask[j]) ASSERT_EQ(rw(i, j), 0.0);
                sum += rw(i, j);
            }
            ASSERT_NEAR(sum, 1.0, 1e-12);
        }

        // adding a constant to every key element shifts each score row
        // uniformly, which the softmax cancels
        Matrix ks = rk;
        double c = -3.0 + 6.0 * rng.uniform();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) ks(i, j) = rk(i, j) + c;
        Matrix ws;
        cm::encoder::attention(rq, ks, rv, mask, &ws);
        for (std::size_t i = 0; i < n * n; ++i)
            ASSERT_NEAR(ws.data()[i], rw.data()[i], 1e-9);

        // masked key/value content cannot leak into the output
        Matrix k2 = rk, v2 = rv;
        for (std::size_t j = 0; j < n; ++j)
            if (!mask[j])
                for (std::size_t col = 0; col < d; ++col) {
                    k2(j, col) = -9.0 + 18.0 * rng.uniform();
                    v2(j, col) = -9.0 + 18.0 * rng.uniform();
                }
        Matrix o2 = cm::encoder::attention(rq, k2, v2, mask);
        for (std::size_t i = 0; i < n * d; ++i)
            ASSERT_NEAR(o2.data()[i], o1.data()[i], 1e-12);
    }
}

// ---- 6: encoder gradients, init loss, overfit ------------------------------

cm::encoder::TokenSequence make_seq(std::vector<int> ids, std::vector<int> mask) {
    cm::encoder::TokenSequence seq;
    seq.ids = std::move(ids);
    seq.attention_mask = std::move(mask);
    seq.segment_ids.assign(seq.ids.size(), 0);
    return seq;
}

TEST(Criterion6, EncoderGradientsAndTraining) {
    Banner b(6);
    cm::encoder::EncoderConfig cfg;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.model_dim = 4;
    cfg.ff_dim = 8;
    cfg.max_len = 4;
    cfg.vocab_size = 12;

    cm::encoder::EncoderParams p = cm::encoder::init_params(cfg, Rng(21));
    auto seq = make_seq({2, 5, 7, 0}, {1, 1, 1, 0});
    const int label = 3;
    cm::encoder::EncoderParams grad = cm::encoder::zeros_like_params(cfg);
    cm::encoder::loss_and_accumulate_grad(p, seq, label, grad);

    std::vector<std::pair<std::string, std::vector<double>*>> pt, gt;
    cm::encoder::for_each_tensor(p, [&](const std::string& n, std::vector<double>& v) {
        pt.push_back({n, &v});
    });
    cm::encoder::for_each_tensor(grad, [&](const std::string& n, std::vector<double>& v) {
        gt.push_back({n, &v});
    });
    const double h = 1e-4;
    for (std::size_t t = 0; t < pt.size(); ++t) {
        auto& pv = *pt[t].second;
        auto& gv = *gt[t].second;
        std::size_t stride = std::max<std::size_t>(1, pv.size() / 12);
        for (std::size_t i = 0; i < pv.size(); i += stride) {
            double save = pv[i];
            cm::encoder::EncoderParams sink = cm::encoder::zeros_like_params(cfg);
            pv[i] = save + h;
            double lp = cm::encoder::loss_and_accumulate_grad(p, seq, label, sink);
            cm::encoder::zero_grad(sink);
            pv[i] = save - h;
            double lm = cm::encoder::loss_and_accumulate_grad(p, seq, label, sink);
            pv[i] = save;
            double fd = (lp - lm) / (2.0 * h);
            double err =
                std::abs(fd - gv[i]) / std::max({std::abs(fd), std::abs(gv[i]), 1e-3});
            ASSERT_LT(err, 1e-4) << pt[t].first << "[" << i << "]";
        }
    }

    // fresh init scores near the uniform baseline
    Rng rng(3);
    double total = 0.0;
    cm::encoder::EncoderParams p2 = cm::encoder::init_params(cfg, Rng(8));
    for (int t = 0; t < 20; ++t) {
        std::vector<int> ids = {2}, mask = {1};
        for (int i = 1; i < cfg.max_len; ++i) {
            bool valid = i < 3;
            ids.push_back(valid ? static_cast<int>(3 + rng.below(9)) : 0);
            mask.push_back(valid ? 1 : 0);
        }
        auto probs = cm::encoder::encode_and_classify(p2, make_seq(ids, mask));
        total += -std::log(probs[t % 8]);
    }
    EXPECT_NEAR(total / 20.0, std::log(8.0), 0.1);

    // 32-example separable toy corpus reaches >= 0.99 train accuracy
    cm::encoder::EncoderConfig tcfg;
    tcfg.num_layers = 2;
    tcfg.num_heads = 2;
    tcfg.model_dim = 16;
    tcfg.ff_dim = 32;
    tcfg.max_len = 8;
    std::vector<std::string> keywords = {"commute", "school", "shop",  "park",
                                         "doctor",  "evac",   "visit", "home"};
    std::vector<std::vector<std::string>> corpus;
    for (int c = 0; c < 8; ++c)
        for (int i = 0; i < 4; ++i) corpus.push_back({keywords[c], "filler", keywords[c]});
    cm::encoder::Vocabulary vocab = cm::encoder::build_vocab(corpus, 120);
    tcfg.vocab_size = static_cast<int>(vocab.size());
    std::vector<std::pair<cm::encoder::TokenSequence, cm::ActivityLabel>> labeled;
    for (int c = 0; c < 8; ++c)
        for (int i = 0; i < 4; ++i)
            labeled.push_back({cm::encoder::tokenize(corpus[c * 4 + i], vocab, tcfg.max_len),
                               static_cast<cm::ActivityLabel>(c)});
    cm::encoder::TrainSettings s;
    s.epochs = 200;
    s.batch_size = 8;
    s.learning_rate = 5e-3;
    s.eval_fraction = 0.0;
    auto result = cm::encoder::train_classifier(labeled, tcfg, s, 13);
    ASSERT_FALSE(result.log.empty());
    EXPECT_GE(result.log.back().train_accuracy, 0.99);
}

// ---- 7: name classifiers on the bundled sample -----------------------------

TEST(Criterion7, NameClassifierSuite) {
    Banner b(7);
    auto ds = cm::names::load_ssa_names(kFixtures + "/ssa_sample.csv");
    ASSERT_EQ(ds.rows.size(), 2000u);

    cm::names::Hyperparams hp;
    hp.forest_trees = 30;
    const cm::names::Algorithm algos[] = {
        cm::names::Algorithm::NaiveBayes, cm::names::Algorithm::KNN,
        cm::names::Algorithm::DecisionTree, cm::names::Algorithm::RandomForest,
        cm::names::Algorithm::LinearSVM};

    auto [train_ds, test_ds] = cm::names::split_dataset(ds, 11);
    for (auto a : algos) {
        auto m1 = cm::names::train(train_ds, a, hp, 11);
        auto m2 = cm::names::train(train_ds, a, hp, 11);
        EXPECT_EQ(m1.to_json().dump(), m2.to_json().dump());
        auto r1 = cm::names::evaluate(m1, test_ds);
        auto r2 = cm::names::evaluate(m2, test_ds);
        EXPECT_EQ(r1.accuracy, r2.accuracy);
        auto cv1 = cm::names::kfold_cv(ds, a, hp, 10, 11);
        auto cv2 = cm::names::kfold_cv(ds, a, hp, 10, 11);
        EXPECT_EQ(cv1.mean_accuracy, cv2.mean_accuracy);
        EXPECT_EQ(cv1.folds.size(), 10u);
        std::size_t covered = 0;
        for (const auto& f : cv1.folds) covered += f.test_size;
        EXPECT_EQ(covered, ds.rows.size());
    }

    // KNN(k=1) resubstitution is perfect when no two names collide
    cm::names::Hyperparams knn_hp;
    knn_hp.knn_k = 1;
    auto knn = cm::names::train(ds, cm::names::Algorithm::KNN, knn_hp, 1);
    std::size_t hits = 0;
    for (const auto& ex : ds.rows)
        if (knn.predict(ex.x).label == ex.label) ++hits;
    EXPECT_EQ(hits, ds.rows.size());

    // a single unbagged tree over all features is exactly a decision tree
    cm::names::Hyperparams rf_hp;
    rf_hp.forest_trees = 1;
    rf_hp.forest_bootstrap = false;
    rf_hp.forest_mtry = 26;
    auto rf = cm::names::train(train_ds, cm::names::Algorithm::RandomForest, rf_hp, 5);
    auto dt = cm::names::train(train_ds, cm::names::Algorithm::DecisionTree, rf_hp, 5);
    for (const auto& ex : test_ds.rows)
        ASSERT_EQ(rf.predict(ex.x).label, dt.predict(ex.x).label);
}

// ---- 8: metrics formulas ---------------------------------------------------

TEST(Criterion8, MetricFormulas) {
    Banner b(8);
    EXPECT_NEAR(cm::names::f1_score(0.9, 0.75), 0.8182, 5e-5);
    EXPECT_NEAR(cm::names::f1_score(0.974, 0.986), 0.98, 1e-3);
    EXPECT_EQ(cm::names::f1_score(0.0, 0.0), 0.0);
    EXPECT_EQ(cm::names::precision_from_counts(0.0, 0.0), 0.0);
    EXPECT_EQ(cm::names::recall_from_counts(0.0, 0.0), 0.0);

    std::vector<int> actual = {0, 0, 1, 1, 1, 2};
    std::vector<int> predicted = {0, 1, 1, 1, 0, 2};
    auto rep = cm::names::eval_from_predictions(actual, predicted, 3);
    std::size_t total = 0;
    for (const auto& row : rep.confusion)
        for (std::size_t c : row) total += c;
    EXPECT_EQ(total, actual.size());
    EXPECT_EQ(rep.test_size, actual.size());
}

// ---- 9: end-to-end determinism ---------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(CM_CLI_PATH) + " " + args + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
#ifdef WEXITSTATUS
    if (rc != -1) rc = WEXITSTATUS(rc);
#endif
    return rc;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TEST(Criterion9, EndToEndDeterminism) {
    Banner b(9);
    std::string a = (fs::temp_directory_path() / "cm_accept_a").string();
    std::string bdir = (fs::temp_directory_path() / "cm_accept_b").string();
    fs::remove_all(a);
    fs::remove_all(bdir);
    std::string cfg = kFixtures + "/config.json";
    ASSERT_EQ(run_cli("run --config " + cfg + " --output_dir " + a), 0);
    ASSERT_EQ(run_cli("run --config " + cfg + " --output_dir " + bdir), 0);

    const char* bundle[] = {"county_counts.csv",         "name_model_metrics.csv",
                            "category_distribution.csv", "sentiment_matrix.csv",
                            "mnl_table.csv",             "run_manifest.json"};
    for (const char* f : bundle) {
        std::string fa = a + "/report/" + f;
        ASSERT_TRUE(fs::exists(fa)) << f;
        EXPECT_EQ(cm::digest_file(fa), cm::digest_file(bdir + "/report/" + f)) << f;
    }

    // schema spot checks
    EXPECT_EQ(slurp(a + "/report/county_counts.csv").substr(0, 16), "fips,name,count\n");
    EXPECT_EQ(slurp(a + "/report/sentiment_matrix.csv").substr(0, 31),
              "label,negative,neutral,positive");
    EXPECT_EQ(slurp(a + "/report/category_distribution.csv").substr(0, 20),
              "label,count,percent\n");
    EXPECT_NE(slurp(a + "/report/name_model_metrics.csv").find("task,algorithm,accuracy"),
              std::string::npos);
    EXPECT_NE(slurp(a + "/report/mnl_table.csv").find("Rho-squared against null model"),
              std::string::npos);

    nlohmann::json manifest = nlohmann::json::parse(slurp(a + "/report/run_manifest.json"));
    ASSERT_TRUE(manifest.contains("counts"));
    int parsed = manifest["counts"]["posts_parsed"].get<int>();
    int relevant = manifest["counts"]["relevant"].get<int>();
    int geocoded = manifest["counts"]["geo_resolved"].get<int>();
    EXPECT_EQ(parsed, 200);
    EXPECT_LE(relevant, parsed);
    EXPECT_LE(geocoded, parsed);

    // conservation: county counts sum to the geocoded total, the sentiment
    // matrix and the category distribution both cover every relevant post
    auto column_sum = [&](const std::string& path, bool all_numeric_cols) {
        std::istringstream in(slurp(path));
        std::string line;
        std::getline(in, line);
        long total = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (all_numeric_cols) {
                std::size_t p1 = line.find(','), p2 = line.rfind(',');
                std::string mid = line.substr(p1 + 1, p2 - p1 - 1);
                std::istringstream cells(mid);
                std::string cell;
                // skip non-numeric name cells
                while (std::getline(cells, cell, ',')) {
                    try {
                        total += std::stol(cell);
                    } catch (...) {
                    }
                }
                total += std::stol(line.substr(p2 + 1));
            } else {
                std::size_t last = line.rfind(',');
                total += std::stol(line.substr(last + 1));
            }
        }
        return total;
    };
    EXPECT_EQ(column_sum(a + "/report/county_counts.csv", false), geocoded);

    long matrix_total = 0;
    {
        std::istringstream in(slurp(a + "/report/sentiment_matrix.csv"));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::istringstream cells(line);
            std::string cell;
            std::getline(cells, cell, ',');  // label
            while (std::getline(cells, cell, ',')) matrix_total += std::stol(cell);
        }
    }
    EXPECT_EQ(matrix_total, relevant);

    long dist_total = 0;
    {
        std::istringstream in(slurp(a + "/report/category_distribution.csv"));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::size_t p1 = line.find(','), p2 = line.rfind(',');
            dist_total += std::stol(line.substr(p1 + 1, p2 - p1 - 1));
        }
    }
    EXPECT_EQ(dist_total, relevant);

    ASSERT_TRUE(manifest.contains("estimation"));
    EXPECT_TRUE(manifest["estimation"].contains("rho_squared"));
}

}  // namespace
