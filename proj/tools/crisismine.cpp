// crisismine: batch pipeline mining crisis activity concerns from geotagged
// social-media posts. Subcommands run individual stages; `run` executes the
// whole pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crisismine/pipeline/config.hpp"
#include "crisismine/pipeline/run.hpp"

namespace {

// Apply `--key value` overrides onto the config document. Dotted keys reach
// nested objects; values parse as JSON when possible, else as strings.
void apply_overrides(nlohmann::json& cfg, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& flag = extras[i];
        if (flag.rfind("--", 0) != 0)
            throw cm::ConfigError("unexpected argument: " + flag);
        if (i + 1 >= extras.size())
            throw cm::ConfigError("override flag needs a value: " + flag);
        std::string key = flag.substr(2);
        std::string value = extras[++i];

        nlohmann::json* node = &cfg;
        std::size_t pos = 0;
        for (;;) {
            std::size_t dot = key.find('.', pos);
            std::string part = key.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
                (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
                break;
            }
            node = &(*node)[part];
            pos = dot + 1;
        }
    }
}

cm::pipeline::PipelineConfig load_config(const std::string& path,
                                         const std::vector<std::string>& extras) {
    std::ifstream in(path);
    if (!in) throw cm::ConfigError("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw cm::ConfigError("config file is not valid JSON: " + path);
    apply_overrides(j, extras);
    std::vector<std::string> errors;
    std::string base = std::filesystem::path(path).parent_path().string();
    cm::pipeline::PipelineConfig cfg = cm::pipeline::validate_config_json(j, errors, base);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "level=error stage=config msg=\"" << e << "\"\n";
        throw cm::ConfigError("configuration invalid (" + std::to_string(errors.size()) +
                              " violation(s))");
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crisismine - activity-concern mining from geotagged posts"};
    app.require_subcommand(1);

    struct Cmd {
        const char* name;
        const char* desc;
        void (*fn)(const cm::pipeline::PipelineConfig&);
    };
    const Cmd cmds[] = {
        {"ingest", "parse, clean, filter and geocode raw posts", cm::pipeline::stage_ingest},
        {"train-names", "train the five demographic name classifiers",
         cm::pipeline::stage_train_names},
        {"infer-demo", "infer gender/race for every post author",
         cm::pipeline::stage_infer_demo},
        {"train-activity", "train the transformer activity classifier",
         cm::pipeline::stage_train_activity},
        {"classify", "label relevant posts with activity categories",
         cm::pipeline::stage_classify},
        {"sentiment", "score sentiment and build the category matrix",
         cm::pipeline::stage_sentiment},
        {"estimate", "estimate the multinomial logit choice model",
         cm::pipeline::stage_estimate},
        {"report", "assemble the report bundle and run manifest",
         cm::pipeline::stage_report},
        {"run", "execute the full pipeline end to end", cm::pipeline::run_pipeline},
    };

    struct SubState {
        CLI::App* sub;
        std::string config_path;
        void (*fn)(const cm::pipeline::PipelineConfig&);
    };
    std::vector<SubState> subs;
    subs.reserve(std::size(cmds));  // add_option binds references into subs
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.desc);
        subs.push_back({sub, "", c.fn});
        sub->add_option("--config", subs.back().config_path, "pipeline config JSON")
            ->required();
        sub->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (const auto& s : subs) {
            if (!s.sub->parsed()) continue;
            cm::pipeline::PipelineConfig cfg =
                load_config(s.config_path, s.sub->remaining());
            s.fn(cfg);
            return 0;
        }
        std::cerr << "level=error msg=\"no subcommand selected\"\n";
        return 2;
    } catch (const cm::ConfigError& e) {
        std::cerr << "level=error kind=config msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const cm::DataError& e) {
        std::cerr << "level=error kind=data msg=\"" << e.what() << "\"\n";
        return 3;
    } catch (const cm::NumericError& e) {
        std::cerr << "level=error kind=numeric msg=\"" << e.what() << "\"\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "level=error kind=internal msg=\"" << e.what() << "\"\n";
        return 3;
    }
}
