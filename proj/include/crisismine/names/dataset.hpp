#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crisismine/names/features.hpp"
#include "crisismine/util/csv.hpp"
#include "crisismine/util/error.hpp"
#include "crisismine/util/rng.hpp"

namespace cm::names {

struct NameDataset {
    std::vector<Example> rows;
    std::vector<std::string> classes;  // canonical order
};

inline const std::vector<std::string>& gender_classes() {
    static const std::vector<std::string> c = {"Male", "Female"};
    return c;
}

inline const std::vector<std::string>& race_classes() {
    static const std::vector<std::string> c = {"Asian", "Black", "Hispanic", "White"};
    return c;
}

// SSA yearly files concatenated: `name,sex,count`. A name seen under both
// sexes keeps the higher-count label; an exact tie drops the name.
inline NameDataset load_ssa_names(const std::string& path) {
    auto rows = csv::read_file(path, "name,sex,count");
    std::map<std::string, std::array<long long, 2>> tally;  // [male, female]
    for (const auto& row : rows) {
        if (row.size() != 3) throw DataError("SSA row has wrong field count");
        const std::string& sex = row[1];
        long long count = std::stoll(row[2]);
        std::string key = row[0];
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (sex == "M") tally[key][0] += count;
        else if (sex == "F") tally[key][1] += count;
        else throw DataError("SSA sex field must be M or F, got: " + sex);
    }
    NameDataset ds;
    ds.classes = gender_classes();
    for (const auto& [name, counts] : tally) {
        if (counts[0] == counts[1]) continue;  // tie -> exclude
        Example ex;
        try {
            ex.x = letter_counts(name);
        } catch (const DataError&) {
            continue;  // no alphabetic characters; warn upstream
        }
        ex.label = counts[0] > counts[1] ? 0 : 1;
        ds.rows.push_back(ex);
    }
    return ds;
}

// Census surname file: `name,rank,count,pct_white,pct_black,pct_api,pct_hispanic`.
// Label = class with the maximum percentage (api -> Asian).
inline NameDataset load_census_surnames(const std::string& path) {
    auto rows = csv::read_file(path, "name,rank,count,pct_white,pct_black,pct_api,pct_hispanic");
    NameDataset ds;
    ds.classes = race_classes();
    for (const auto& row : rows) {
        if (row.size() != 7) throw DataError("census surname row has wrong field count");
        double pct_white = std::stod(row[3]);
        double pct_black = std::stod(row[4]);
        double pct_api = std::stod(row[5]);
        double pct_hispanic = std::stod(row[6]);
        // canonical order Asian, Black, Hispanic, White
        std::array<double, 4> pct = {pct_api, pct_black, pct_hispanic, pct_white};
        int label = 0;
        for (int c = 1; c < 4; ++c)
            if (pct[c] > pct[label]) label = c;
        Example ex;
        try {
            ex.x = letter_counts(row[0]);
        } catch (const DataError&) {
            continue;
        }
        ex.label = label;
        ds.rows.push_back(ex);
    }
    return ds;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> indices_by_class(const NameDataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(ds.classes.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        by_class[ds.rows[i].label].push_back(i);
    return by_class;
}

}  // namespace detail

// Stratified 70/30 split, deterministic under seed.
inline std::pair<NameDataset, NameDataset> split_dataset(const NameDataset& ds,
                                                         std::uint64_t seed) {
    if (ds.rows.size() < 10) throw DataError("dataset too small to split (< 10 rows)");
    auto by_class = detail::indices_by_class(ds);
    NameDataset train, test;
    train.classes = test.classes = ds.classes;
    Rng rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        if (idx.size() < 2)
            throw DataError("class '" + ds.classes[c] + "' has < 2 rows; cannot stratify");
        Rng crng = rng.split(c);
        crng.shuffle(idx);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(0.7 * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? train : test).rows.push_back(ds.rows[idx[i]]);
    }
    return {std::move(train), std::move(test)};
}

// Stratified k folds; returns fold id per row.
inline std::vector<int> kfold_assignments(const NameDataset& ds, int k,
                                          std::uint64_t seed) {
    auto by_class = detail::indices_by_class(ds);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() < static_cast<std::size_t>(k))
            throw DataError("class '" + ds.classes[c] + "' has fewer rows than folds");
    std::vector<int> fold(ds.rows.size(), -1);
    Rng rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        Rng crng = rng.split(1000 + c);
        crng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            fold[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fold;
}

}  // namespace cm::names
