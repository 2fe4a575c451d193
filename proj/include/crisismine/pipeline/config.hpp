#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/encoder/model.hpp"
#include "crisismine/mnl/model.hpp"
#include "crisismine/names/classifiers.hpp"
#include "crisismine/text/clean.hpp"
#include "crisismine/util/error.hpp"

namespace cm::pipeline {

// Stand-in wildfire/travel keyword list; swap via the `relevance_rules`
// config key.
inline std::vector<std::string> default_relevance_rules() {
    return {"wildfire",  "smoke",    "haze",      "air quality", "evacuate",
            "evacuation", "commute", "commuting", "stay home",   "stay indoors",
            "school trip", "errand", "shopping",  "transit",     "subway",
            "travel",     "traffic"};
}

struct PipelineConfig {
    // input paths
    std::string posts;
    std::string geography;
    std::string socio_table;
    std::string ssa_names;
    std::string census_surnames;
    std::string labeled_posts;
    std::string lexicon;
    std::string mnl_spec;
    std::string stopwords;
    std::string output_dir;

    std::uint64_t seed = 0;
    std::vector<std::string> relevance_rules;
    std::vector<std::string> negators;
    double sentiment_tau_pos = 0.5;
    double sentiment_tau_neg = -0.5;

    text::CleanOptions cleaning;
    std::string gender_algorithm = "RandomForest";
    std::string race_algorithm = "LinearSVM";
    int cv_folds = 10;
    names::Hyperparams name_hp;
    encoder::EncoderConfig encoder_cfg;   // vocab_size here = build target
    encoder::TrainSettings training;
    mnl::EstimateSettings mnl_settings;
};

namespace detail {

struct KeyChecker {
    const nlohmann::json& obj;
    std::string prefix;
    std::vector<std::string>& errors;
    std::vector<std::string> known;

    bool has(const std::string& key) {
        known.push_back(key);
        return obj.contains(key);
    }

    void finish() {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const auto& k : known)
                if (k == it.key()) { ok = true; break; }
            if (!ok) errors.push_back("unknown config key: " + prefix + it.key());
        }
    }
};

}  // namespace detail

// Returns the fully-resolved config; collects every violation before
// failing so a bad file is diagnosed in one pass.
inline PipelineConfig validate_config_json(const nlohmann::json& j,
                                           std::vector<std::string>& errors,
                                           const std::string& base_dir = "") {
    PipelineConfig cfg;
    if (!j.is_object()) {
        errors.push_back("config root must be a JSON object");
        return cfg;
    }
    detail::KeyChecker top{j, "", errors, {}};

    auto resolve = [&](const std::string& p) {
        if (base_dir.empty() || p.empty()) return p;
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (std::filesystem::path(base_dir) / fp).string();
    };
    auto need_path = [&](const char* key, std::string& out, bool must_exist) {
        if (!top.has(key)) {
            errors.push_back(std::string("missing required config key: ") + key);
            return;
        }
        if (!j[key].is_string()) {
            errors.push_back(std::string("config key must be a string: ") + key);
            return;
        }
        out = resolve(j[key].get<std::string>());
        if (must_exist && !std::filesystem::exists(out))
            errors.push_back(std::string("config path does not exist (") + key + "): " + out);
    };

    need_path("posts", cfg.posts, true);
    need_path("geography", cfg.geography, true);
    need_path("socio_table", cfg.socio_table, true);
    need_path("ssa_names", cfg.ssa_names, true);
    need_path("census_surnames", cfg.census_surnames, true);
    need_path("labeled_posts", cfg.labeled_posts, true);
    need_path("lexicon", cfg.lexicon, true);
    need_path("mnl_spec", cfg.mnl_spec, true);
    need_path("stopwords", cfg.stopwords, true);
    need_path("output_dir", cfg.output_dir, false);

    if (top.has("seed")) {
        if (j["seed"].is_number_unsigned() || j["seed"].is_number_integer())
            cfg.seed = j["seed"].get<std::uint64_t>();
        else errors.push_back("config key 'seed' must be an integer");
    } else {
        errors.push_back("missing required config key: seed");
    }

    if (top.has("relevance_rules")) {
        if (j["relevance_rules"].is_array())
            cfg.relevance_rules = j["relevance_rules"].get<std::vector<std::string>>();
        else errors.push_back("config key 'relevance_rules' must be an array of strings");
        if (j["relevance_rules"].is_array() && cfg.relevance_rules.empty())
            errors.push_back("relevance_rules must be non-empty");
    } else {
        // the paper's keyword list is unpublished; this stand-in is the default
        cfg.relevance_rules = default_relevance_rules();
    }

    if (top.has("negators"))
        cfg.negators = j["negators"].get<std::vector<std::string>>();
    if (top.has("sentiment_tau_pos")) cfg.sentiment_tau_pos = j["sentiment_tau_pos"].get<double>();
    if (top.has("sentiment_tau_neg")) cfg.sentiment_tau_neg = j["sentiment_tau_neg"].get<double>();
    if (!(cfg.sentiment_tau_neg < 0.0 && cfg.sentiment_tau_pos > 0.0))
        errors.push_back("sentiment thresholds must satisfy tau_neg < 0 < tau_pos");

    if (top.has("cleaning")) {
        detail::KeyChecker c{j["cleaning"], "cleaning.", errors, {}};
        if (c.has("suffixes"))
            cfg.cleaning.suffixes = j["cleaning"]["suffixes"].get<std::vector<std::string>>();
        if (c.has("min_stem_len"))
            cfg.cleaning.min_stem_len = j["cleaning"]["min_stem_len"].get<std::size_t>();
        c.finish();
    }

    if (top.has("name_model")) {
        const auto& n = j["name_model"];
        detail::KeyChecker c{n, "name_model.", errors, {}};
        if (c.has("gender_algorithm")) cfg.gender_algorithm = n["gender_algorithm"].get<std::string>();
        if (c.has("race_algorithm")) cfg.race_algorithm = n["race_algorithm"].get<std::string>();
        if (c.has("cv_folds")) cfg.cv_folds = n["cv_folds"].get<int>();
        if (c.has("knn_k")) cfg.name_hp.knn_k = n["knn_k"].get<int>();
        if (c.has("tree_max_depth")) cfg.name_hp.tree_max_depth = n["tree_max_depth"].get<int>();
        if (c.has("tree_min_leaf")) cfg.name_hp.tree_min_leaf = n["tree_min_leaf"].get<int>();
        if (c.has("forest_trees")) cfg.name_hp.forest_trees = n["forest_trees"].get<int>();
        if (c.has("forest_mtry")) cfg.name_hp.forest_mtry = n["forest_mtry"].get<int>();
        if (c.has("svm_epochs")) cfg.name_hp.svm_epochs = n["svm_epochs"].get<int>();
        if (c.has("svm_lambda")) cfg.name_hp.svm_lambda = n["svm_lambda"].get<double>();
        if (c.has("nb_alpha")) cfg.name_hp.nb_alpha = n["nb_alpha"].get<double>();
        c.finish();
        for (const std::string& a : {cfg.gender_algorithm, cfg.race_algorithm}) {
            try {
                names::algorithm_from_name(a);
            } catch (const ConfigError& e) {
                errors.push_back(e.what());
            }
        }
    }

    cfg.encoder_cfg.vocab_size = 2000;  // build target; final size set after vocab build
    if (top.has("encoder")) {
        const auto& e = j["encoder"];
        detail::KeyChecker c{e, "encoder.", errors, {}};
        if (c.has("num_layers")) cfg.encoder_cfg.num_layers = e["num_layers"].get<int>();
        if (c.has("num_heads")) cfg.encoder_cfg.num_heads = e["num_heads"].get<int>();
        if (c.has("model_dim")) cfg.encoder_cfg.model_dim = e["model_dim"].get<int>();
        if (c.has("ff_dim")) cfg.encoder_cfg.ff_dim = e["ff_dim"].get<int>();
        if (c.has("max_len")) cfg.encoder_cfg.max_len = e["max_len"].get<int>();
        if (c.has("vocab_size")) cfg.encoder_cfg.vocab_size = e["vocab_size"].get<int>();
        if (c.has("dropout")) cfg.encoder_cfg.dropout = e["dropout"].get<double>();
        c.finish();
        if (cfg.encoder_cfg.model_dim % std::max(cfg.encoder_cfg.num_heads, 1) != 0)
            errors.push_back("encoder.model_dim must be divisible by encoder.num_heads");
    }

    if (top.has("training")) {
        const auto& t = j["training"];
        detail::KeyChecker c{t, "training.", errors, {}};
        if (c.has("epochs")) cfg.training.epochs = t["epochs"].get<int>();
        if (c.has("batch_size")) cfg.training.batch_size = t["batch_size"].get<int>();
        if (c.has("learning_rate")) cfg.training.learning_rate = t["learning_rate"].get<double>();
        if (c.has("eval_fraction")) cfg.training.eval_fraction = t["eval_fraction"].get<double>();
        c.finish();
    }

    if (top.has("mnl")) {
        const auto& m = j["mnl"];
        detail::KeyChecker c{m, "mnl.", errors, {}};
        if (c.has("max_iter")) cfg.mnl_settings.max_iter = m["max_iter"].get<int>();
        if (c.has("tol")) cfg.mnl_settings.tol = m["tol"].get<double>();
        if (c.has("ridge")) cfg.mnl_settings.ridge = m["ridge"].get<double>();
        c.finish();
    }

    top.finish();
    return cfg;
}

inline PipelineConfig validate_config(const std::string& path,
                                      std::vector<std::string>& errors) {
    std::ifstream in(path);
    if (!in) {
        errors.push_back("cannot open config file: " + path);
        return {};
    }
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        errors.push_back("config file is not valid JSON: " + path);
        return {};
    }
    std::string base = std::filesystem::path(path).parent_path().string();
    return validate_config_json(j, errors, base);
}

}  // namespace cm::pipeline
