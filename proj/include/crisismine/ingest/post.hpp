#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "crisismine/util/error.hpp"

namespace cm::ingest {

struct RawPost {
    std::string id;
    std::string text;
    std::string first_name;
    std::string last_name;
    double lon = 0.0;
    double lat = 0.0;
    std::string ts;  // RFC 3339
};

struct CleanPost {
    std::string id;
    std::string normalized_text;
    std::vector<std::string> tokens;
    std::optional<std::string> geo_unit;  // 5-digit FIPS
    bool relevant = false;
};

struct ParseError {
    std::size_t line;  // 1-based
    std::string reason;
};

namespace detail {

inline bool valid_rfc3339(const std::string& ts) {
    // YYYY-MM-DDTHH:MM:SS with optional fractional seconds and Z or +-HH:MM
    if (ts.size() < 20) return false;
    auto digit = [&](std::size_t i) { return ts[i] >= '0' && ts[i] <= '9'; };
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
        if (!digit(i)) return false;
    if (ts[4] != '-' || ts[7] != '-' || (ts[10] != 'T' && ts[10] != 't') ||
        ts[13] != ':' || ts[16] != ':')
        return false;
    std::size_t i = 19;
    if (ts[i] == '.') {
        ++i;
        if (i >= ts.size() || !digit(i)) return false;
        while (i < ts.size() && digit(i)) ++i;
    }
    if (i >= ts.size()) return false;
    if (ts[i] == 'Z' || ts[i] == 'z') return i + 1 == ts.size();
    if (ts[i] != '+' && ts[i] != '-') return false;
    return ts.size() == i + 6 && digit(i + 1) && digit(i + 2) && ts[i + 3] == ':' &&
           digit(i + 4) && digit(i + 5);
}

}  // namespace detail

inline std::string validate_post(const RawPost& p) {
    if (p.id.empty()) return "empty id";
    if (p.text.size() > 10000) return "text exceeds 10000 bytes";
    if (p.lon < -180.0 || p.lon > 180.0) return "longitude out of range";
    if (p.lat < -90.0 || p.lat > 90.0) return "latitude out of range";
    if (!detail::valid_rfc3339(p.ts)) return "invalid RFC 3339 timestamp";
    return "";
}

inline std::string serialize_post(const RawPost& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["text"] = p.text;
    j["first_name"] = p.first_name;
    j["last_name"] = p.last_name;
    j["lon"] = p.lon;
    j["lat"] = p.lat;
    j["ts"] = p.ts;
    return j.dump();
}

// Streaming NDJSON parse. Well-formed lines invoke `sink` in input order;
// malformed lines invoke `on_error` and never abort. Memory use is one
// line plus the duplicate-id set.
inline void parse_posts_stream(std::istream& in,
                               const std::function<void(RawPost&&)>& sink,
                               const std::function<void(ParseError&&)>& on_error) {
    if (!in) throw DataError("post input stream is unreadable");
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            on_error({lineno, "invalid JSON object"});
            continue;
        }
        RawPost p;
        try {
            p.id = j.at("id").get<std::string>();
            p.text = j.at("text").get<std::string>();
            p.first_name = j.at("first_name").get<std::string>();
            p.last_name = j.at("last_name").get<std::string>();
            p.lon = j.at("lon").get<double>();
            p.lat = j.at("lat").get<double>();
            p.ts = j.at("ts").get<std::string>();
        } catch (const std::exception& e) {
            on_error({lineno, std::string("missing or mistyped field: ") + e.what()});
            continue;
        }
        std::string why = validate_post(p);
        if (!why.empty()) {
            on_error({lineno, why});
            continue;
        }
        if (!seen_ids.insert(p.id).second) {
            on_error({lineno, "duplicate id: " + p.id});
            continue;
        }
        sink(std::move(p));
    }
    if (in.bad()) throw DataError("I/O failure while reading post stream");
}

inline std::pair<std::vector<RawPost>, std::vector<ParseError>> parse_posts(
    std::istream& in) {
    std::vector<RawPost> posts;
    std::vector<ParseError> errors;
    parse_posts_stream(
        in, [&](RawPost&& p) { posts.push_back(std::move(p)); },
        [&](ParseError&& e) { errors.push_back(std::move(e)); });
    return {std::move(posts), std::move(errors)};
}

}  // namespace cm::ingest
