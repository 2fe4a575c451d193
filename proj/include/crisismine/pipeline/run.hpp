#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/encoder/checkpoint.hpp"
#include "crisismine/encoder/model.hpp"
#include "crisismine/encoder/tokenize.hpp"
#include "crisismine/encoder/vocab.hpp"
#include "crisismine/geo/geo.hpp"
#include "crisismine/ingest/post.hpp"
#include "crisismine/labels.hpp"
#include "crisismine/mnl/model.hpp"
#include "crisismine/mnl/report.hpp"
#include "crisismine/names/classifiers.hpp"
#include "crisismine/pipeline/config.hpp"
#include "crisismine/sentiment/sentiment.hpp"
#include "crisismine/text/clean.hpp"
#include "crisismine/text/relevance.hpp"
#include "crisismine/util/csv.hpp"
#include "crisismine/util/digest.hpp"

namespace cm::pipeline {

namespace fs = std::filesystem;

inline void log_line(const std::string& stage, const std::string& msg) {
    std::cerr << "level=info stage=" << stage << " msg=\"" << msg << "\"\n";
}

namespace detail {

inline std::string out_path(const PipelineConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

inline void require_intermediate(const PipelineConfig& cfg, const std::string& name,
                                 const std::string& producer) {
    if (!fs::exists(out_path(cfg, name)))
        throw DataError("missing intermediate '" + name + "'; run the '" + producer +
                        "' subcommand first");
}

inline void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    out << content;
    if (!out) throw DataError("I/O failure writing: " + path);
}

inline std::vector<nlohmann::json> read_ndjson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

}  // namespace detail

// ---- stage: ingest ---------------------------------------------------------

inline void stage_ingest(const PipelineConfig& cfg) {
    auto stopwords = text::load_stopwords(cfg.stopwords);
    auto rules = text::load_rules(cfg.relevance_rules);
    // rules match against the lemmatized token stream
    for (auto& rule : rules)
        for (auto& w : rule.words) w = text::lemmatize(w, cfg.cleaning);
    auto units = geo::load_geography(cfg.geography);

    std::ifstream in(cfg.posts);
    if (!in) throw DataError("cannot open posts file: " + cfg.posts);

    std::ostringstream clean_out, err_out;
    std::size_t n_posts = 0, n_relevant = 0, n_geo = 0;
    std::map<std::string, std::size_t> county_counts;
    ingest::parse_posts_stream(
        in,
        [&](ingest::RawPost&& p) {
            ++n_posts;
            auto [norm, tokens] = text::clean_text(p.text, stopwords, cfg.cleaning);
            bool relevant = !tokens.empty() && text::relevance_filter(tokens, rules);
            std::optional<std::string> fips = geo::assign_geography(p.lon, p.lat, units);
            if (relevant) ++n_relevant;
            if (fips) {
                ++n_geo;
                ++county_counts[*fips];
            }
            nlohmann::ordered_json j;
            j["id"] = p.id;
            j["first_name"] = p.first_name;
            j["last_name"] = p.last_name;
            j["normalized_text"] = norm;
            j["tokens"] = tokens;
            if (fips) j["geo_unit"] = *fips;
            else j["geo_unit"] = nullptr;
            j["relevant"] = relevant;
            clean_out << j.dump() << "\n";
        },
        [&](ingest::ParseError&& e) {
            nlohmann::ordered_json j;
            j["line"] = e.line;
            j["reason"] = e.reason;
            err_out << j.dump() << "\n";
        });

    detail::write_file(detail::out_path(cfg, "clean_posts.ndjson"), clean_out.str());
    detail::write_file(detail::out_path(cfg, "parse_errors.ndjson"), err_out.str());

    std::string cc = "fips,name,count\n";
    for (const auto& u : units) {
        auto it = county_counts.find(u.fips);
        std::size_t c = it == county_counts.end() ? 0 : it->second;
        cc += u.fips + "," + csv::quote(u.name) + "," + std::to_string(c) + "\n";
    }
    detail::write_file(detail::out_path(cfg, "county_counts.csv"), cc);

    nlohmann::ordered_json counts;
    counts["posts_parsed"] = n_posts;
    counts["relevant"] = n_relevant;
    counts["geo_resolved"] = n_geo;
    detail::write_file(detail::out_path(cfg, "ingest_counts.json"), counts.dump(2) + "\n");
    log_line("ingest", std::to_string(n_posts) + " posts, " + std::to_string(n_relevant) +
                           " relevant, " + std::to_string(n_geo) + " geocoded");
}

// ---- stage: train-names ----------------------------------------------------

inline void stage_train_names(const PipelineConfig& cfg) {
    struct Task {
        const char* task;
        names::NameDataset ds;
        std::string selected_algorithm;
        const char* model_file;
    };
    std::vector<Task> tasks;
    tasks.push_back({"gender", names::load_ssa_names(cfg.ssa_names), cfg.gender_algorithm,
                     "name_models/gender.json"});
    tasks.push_back({"race", names::load_census_surnames(cfg.census_surnames),
                     cfg.race_algorithm, "name_models/race.json"});

    const names::Algorithm algos[] = {
        names::Algorithm::NaiveBayes, names::Algorithm::KNN, names::Algorithm::DecisionTree,
        names::Algorithm::RandomForest, names::Algorithm::LinearSVM};

    std::string metrics =
        "task,algorithm,accuracy,oob_accuracy,macro_precision,macro_recall,macro_f1,"
        "cv_mean_accuracy,cv_std_accuracy\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };

    for (auto& task : tasks) {
        auto [train_ds, test_ds] = names::split_dataset(task.ds, cfg.seed);
        for (names::Algorithm a : algos) {
            names::NameClassifier model = names::train(train_ds, a, cfg.name_hp, cfg.seed);
            names::EvalReport rep = names::evaluate(model, test_ds);
            names::CvSummary cv = names::kfold_cv(task.ds, a, cfg.name_hp, cfg.cv_folds, cfg.seed);
            metrics += std::string(task.task) + "," + names::algorithm_name(a) + "," +
                       num(rep.accuracy) + "," +
                       (rep.oob_accuracy ? num(*rep.oob_accuracy) : std::string("")) + "," +
                       num(rep.macro_precision) + "," + num(rep.macro_recall) + "," +
                       num(rep.macro_f1) + "," + num(cv.mean_accuracy) + "," +
                       num(cv.stdev_accuracy) + "\n";
            if (names::algorithm_name(a) == task.selected_algorithm)
                detail::write_file(detail::out_path(cfg, task.model_file),
                                   model.to_json().dump(2) + "\n");
        }
        log_line("train-names", std::string(task.task) + ": " +
                                    std::to_string(task.ds.rows.size()) + " rows");
    }
    detail::write_file(detail::out_path(cfg, "name_model_metrics.csv"), metrics);
}

// ---- stage: infer-demo -----------------------------------------------------

inline void stage_infer_demo(const PipelineConfig& cfg) {
    detail::require_intermediate(cfg, "clean_posts.ndjson", "ingest");
    detail::require_intermediate(cfg, "name_models/gender.json", "train-names");
    detail::require_intermediate(cfg, "name_models/race.json", "train-names");

    auto load_model = [&](const std::string& name) {
        std::ifstream in(detail::out_path(cfg, name));
        nlohmann::json j;
        in >> j;
        return names::NameClassifier::from_json(j);
    };
    names::NameClassifier gender = load_model("name_models/gender.json");
    names::NameClassifier race = load_model("name_models/race.json");

    std::ostringstream out;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "clean_posts.ndjson"))) {
        nlohmann::ordered_json d;
        d["id"] = j.at("id");
        try {
            names::Prediction g = gender.predict_name(j.at("first_name").get<std::string>());
            names::Prediction r = race.predict_name(j.at("last_name").get<std::string>());
            d["gender"] = gender.classes[g.label];
            d["gender_score"] = g.score;
            d["race"] = race.classes[r.label];
            d["race_score"] = r.score;
        } catch (const DataError&) {
            d["gender"] = nullptr;  // unnormalizable name
            d["race"] = nullptr;
        }
        out << d.dump() << "\n";
    }
    detail::write_file(detail::out_path(cfg, "demographics.ndjson"), out.str());
    log_line("infer-demo", "demographics inferred");
}

// ---- stage: train-activity -------------------------------------------------

inline std::vector<std::pair<std::string, ActivityLabel>> load_labeled_posts(
    const std::string& path) {
    auto rows = csv::read_file(path, "id,text,label");
    std::vector<std::pair<std::string, ActivityLabel>> out;
    for (const auto& row : rows) {
        if (row.size() != 3) throw DataError("labeled post row has wrong field count");
        out.push_back({row[1], activity_label_from_string(row[2])});
    }
    return out;
}

inline void stage_train_activity(const PipelineConfig& cfg) {
    auto stopwords = text::load_stopwords(cfg.stopwords);
    auto labeled = load_labeled_posts(cfg.labeled_posts);
    if (labeled.empty()) throw DataError("no labeled training posts");

    std::vector<std::vector<std::string>> corpus;
    std::vector<std::pair<std::vector<std::string>, ActivityLabel>> tokenized;
    for (const auto& [txt, label] : labeled) {
        auto [norm, tokens] = text::clean_text(txt, stopwords, cfg.cleaning);
        corpus.push_back(tokens);
        tokenized.push_back({tokens, label});
    }

    encoder::Vocabulary vocab =
        encoder::build_vocab(corpus, static_cast<std::size_t>(cfg.encoder_cfg.vocab_size));
    encoder::EncoderConfig ecfg = cfg.encoder_cfg;
    ecfg.vocab_size = static_cast<int>(vocab.size());

    std::vector<std::pair<encoder::TokenSequence, ActivityLabel>> data;
    for (const auto& [tokens, label] : tokenized)
        data.push_back({encoder::tokenize(tokens, vocab, ecfg.max_len), label});

    encoder::TrainResult res = encoder::train_classifier(data, ecfg, cfg.training, cfg.seed);
    encoder::save_checkpoint(detail::out_path(cfg, "activity_model.bin"), res.params, vocab);

    std::string log = "epoch,mean_loss,train_accuracy\n";
    char buf[64];
    for (const auto& e : res.log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", e.epoch, e.mean_loss,
                      e.train_accuracy);
        log += buf;
    }
    detail::write_file(detail::out_path(cfg, "training_log.csv"), log);

    nlohmann::ordered_json ev;
    ev["eval_size"] = res.eval.test_size;
    ev["accuracy"] = res.eval.accuracy;
    ev["macro_precision"] = res.eval.macro_precision;
    ev["macro_recall"] = res.eval.macro_recall;
    ev["macro_f1"] = res.eval.macro_f1;
    detail::write_file(detail::out_path(cfg, "activity_eval.json"), ev.dump(2) + "\n");
    log_line("train-activity", "final train accuracy " +
                                   std::to_string(res.log.back().train_accuracy));
}

// ---- stage: classify -------------------------------------------------------

inline void stage_classify(const PipelineConfig& cfg) {
    detail::require_intermediate(cfg, "clean_posts.ndjson", "ingest");
    detail::require_intermediate(cfg, "activity_model.bin", "train-activity");

    auto [params, vocab] = encoder::load_checkpoint(detail::out_path(cfg, "activity_model.bin"));
    std::ostringstream out;
    std::array<std::size_t, kNumActivityLabels> counts{};
    std::size_t total = 0;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "clean_posts.ndjson"))) {
        if (!j.at("relevant").get<bool>()) continue;
        auto tokens = j.at("tokens").get<std::vector<std::string>>();
        encoder::TokenSequence seq = encoder::tokenize(tokens, vocab, params.cfg.max_len);
        ActivityLabel label = encoder::classify_one(params, seq);
        ++counts[static_cast<int>(label)];
        ++total;
        nlohmann::ordered_json r;
        r["id"] = j.at("id");
        r["label"] = to_string(label);
        out << r.dump() << "\n";
    }
    detail::write_file(detail::out_path(cfg, "labels.ndjson"), out.str());

    std::string dist = "label,count,percent\n";
    char buf[64];
    for (int c = 0; c < kNumActivityLabels; ++c) {
        double pct = total ? 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total)
                           : 0.0;
        std::snprintf(buf, sizeof(buf), "%.2f", pct);
        dist += activity_label_names()[c] + "," + std::to_string(counts[c]) + "," + buf + "\n";
    }
    detail::write_file(detail::out_path(cfg, "category_distribution.csv"), dist);
    log_line("classify", std::to_string(total) + " relevant posts classified");
}

// ---- stage: sentiment ------------------------------------------------------

inline void stage_sentiment(const PipelineConfig& cfg) {
    detail::require_intermediate(cfg, "clean_posts.ndjson", "ingest");
    detail::require_intermediate(cfg, "labels.ndjson", "classify");

    sentiment::Lexicon lex = sentiment::load_lexicon(cfg.lexicon, cfg.negators,
                                                     cfg.sentiment_tau_pos,
                                                     cfg.sentiment_tau_neg);
    std::map<std::string, std::vector<std::string>> tokens_by_id;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "clean_posts.ndjson")))
        tokens_by_id[j.at("id").get<std::string>()] =
            j.at("tokens").get<std::vector<std::string>>();

    std::ostringstream out;
    std::vector<std::pair<ActivityLabel, sentiment::SentimentClass>> pairs;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "labels.ndjson"))) {
        std::string id = j.at("id").get<std::string>();
        ActivityLabel label = activity_label_from_string(j.at("label").get<std::string>());
        sentiment::SentimentScore s = sentiment::score_post(tokens_by_id.at(id), lex);
        pairs.push_back({label, s.cls});
        nlohmann::ordered_json r;
        r["id"] = id;
        r["raw"] = s.raw;
        r["class"] = sentiment::to_string(s.cls);
        out << r.dump() << "\n";
    }
    detail::write_file(detail::out_path(cfg, "sentiments.ndjson"), out.str());
    sentiment::CategorySentimentMatrix m = sentiment::aggregate_matrix(pairs);
    detail::write_file(detail::out_path(cfg, "sentiment_matrix.csv"), sentiment::matrix_csv(m));
    log_line("sentiment", std::to_string(m.total()) + " posts scored");
}

// ---- stage: estimate -------------------------------------------------------

inline void stage_estimate(const PipelineConfig& cfg) {
    detail::require_intermediate(cfg, "clean_posts.ndjson", "ingest");
    detail::require_intermediate(cfg, "labels.ndjson", "classify");
    detail::require_intermediate(cfg, "demographics.ndjson", "infer-demo");

    mnl::UtilitySpec spec = mnl::load_spec(cfg.mnl_spec);
    auto socio = geo::load_socio_table(cfg.socio_table);

    std::map<std::string, int> label_by_id;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "labels.ndjson")))
        label_by_id[j.at("id").get<std::string>()] = static_cast<int>(
            activity_label_from_string(j.at("label").get<std::string>()));

    std::map<std::string, nlohmann::json> demo_by_id;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "demographics.ndjson")))
        demo_by_id[j.at("id").get<std::string>()] = j;

    std::vector<mnl::ChoiceObservation> data;
    std::size_t skipped_no_geo = 0, skipped_no_demo = 0;
    for (const auto& j : detail::read_ndjson(detail::out_path(cfg, "clean_posts.ndjson"))) {
        std::string id = j.at("id").get<std::string>();
        auto lit = label_by_id.find(id);
        if (lit == label_by_id.end()) continue;  // not relevant / not classified
        if (j.at("geo_unit").is_null()) { ++skipped_no_geo; continue; }
        auto profile = geo::join_socioeconomics(j.at("geo_unit").get<std::string>(), socio);
        if (!profile) { ++skipped_no_geo; continue; }
        const auto& d = demo_by_id.at(id);
        if (d.at("gender").is_null() || d.at("race").is_null()) { ++skipped_no_demo; continue; }
        mnl::ChoiceObservation obs;
        obs.chosen = lit->second;
        std::string g = d.at("gender").get<std::string>();
        std::string r = d.at("race").get<std::string>();
        obs.attrs["female"] = g == "Female" ? 1.0 : 0.0;
        obs.attrs["race_asian"] = r == "Asian" ? 1.0 : 0.0;
        obs.attrs["race_black"] = r == "Black" ? 1.0 : 0.0;
        obs.attrs["race_hispanic"] = r == "Hispanic" ? 1.0 : 0.0;
        obs.attrs["low_inc_non_ed"] = static_cast<double>(profile->low_income_flag);
        data.push_back(std::move(obs));
    }

    nlohmann::ordered_json meta;
    meta["estimation_rows"] = data.size();
    meta["skipped_no_geography"] = skipped_no_geo;
    meta["skipped_no_demographics"] = skipped_no_demo;

    if (data.empty()) {
        meta["skipped"] = true;
        detail::write_file(detail::out_path(cfg, "mnl_estimate.json"), meta.dump(2) + "\n");
        detail::write_file(detail::out_path(cfg, "mnl_table.csv"),
                           "SKIPPED,no estimation rows,,\n");
        detail::write_file(detail::out_path(cfg, "mnl_table.txt"),
                           "*** SKIPPED: no estimation rows ***\n");
        log_line("estimate", "skipped: zero estimation rows");
        return;
    }

    mnl::MNLEstimate est = mnl::estimate(spec, data, cfg.mnl_settings);
    mnl::EstimationTable table = mnl::report_table(est, spec, data.size());
    detail::write_file(detail::out_path(cfg, "mnl_table.csv"), mnl::table_csv(table));
    detail::write_file(detail::out_path(cfg, "mnl_table.txt"), mnl::table_text(table));

    meta["skipped"] = false;
    meta["converged"] = est.converged;
    meta["iterations"] = est.iterations;
    meta["loglik"] = est.loglik;
    meta["loglik_null"] = est.loglik_null;
    meta["rho_squared"] = est.rho_squared;
    meta["beta"] = est.beta;
    meta["std_errors"] = est.std_errors;
    detail::write_file(detail::out_path(cfg, "mnl_estimate.json"), meta.dump(2) + "\n");
    log_line("estimate", std::string("converged=") + (est.converged ? "true" : "false") +
                             " rows=" + std::to_string(data.size()));
}

// ---- stage: report ---------------------------------------------------------

inline void stage_report(const PipelineConfig& cfg) {
    const char* needed[] = {"county_counts.csv",     "name_model_metrics.csv",
                            "category_distribution.csv", "sentiment_matrix.csv",
                            "mnl_table.csv"};
    const char* producers[] = {"ingest", "train-names", "classify", "sentiment", "estimate"};
    for (int i = 0; i < 5; ++i) detail::require_intermediate(cfg, needed[i], producers[i]);

    for (const char* name : needed) {
        std::ifstream in(detail::out_path(cfg, name), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        detail::write_file(detail::out_path(cfg, std::string("report/") + name), ss.str());
    }

    nlohmann::ordered_json manifest;
    manifest["tool"] = "crisismine";
    manifest["schema_version"] = 1;
    manifest["seed"] = cfg.seed;
    nlohmann::ordered_json inputs;
    for (const auto& [key, path] :
         std::vector<std::pair<std::string, std::string>>{{"posts", cfg.posts},
                                                          {"geography", cfg.geography},
                                                          {"socio_table", cfg.socio_table},
                                                          {"ssa_names", cfg.ssa_names},
                                                          {"census_surnames", cfg.census_surnames},
                                                          {"labeled_posts", cfg.labeled_posts},
                                                          {"lexicon", cfg.lexicon},
                                                          {"mnl_spec", cfg.mnl_spec},
                                                          {"stopwords", cfg.stopwords}})
        inputs[key] = digest_file(path);
    manifest["input_digests"] = std::move(inputs);
    {
        std::ifstream in(detail::out_path(cfg, "ingest_counts.json"));
        if (in) {
            nlohmann::json counts;
            in >> counts;
            manifest["counts"] = counts;
        }
    }
    {
        std::ifstream in(detail::out_path(cfg, "mnl_estimate.json"));
        if (in) {
            nlohmann::json est;
            in >> est;
            manifest["estimation"] = est;
        }
    }
    detail::write_file(detail::out_path(cfg, "report/run_manifest.json"),
                       manifest.dump(2) + "\n");
    log_line("report", "report bundle written");
}

inline void run_pipeline(const PipelineConfig& cfg) {
    stage_ingest(cfg);
    stage_train_names(cfg);
    stage_infer_demo(cfg);
    stage_train_activity(cfg);
    stage_classify(cfg);
    stage_sentiment(cfg);
    stage_estimate(cfg);
    stage_report(cfg);
}

}  // namespace cm::pipeline
