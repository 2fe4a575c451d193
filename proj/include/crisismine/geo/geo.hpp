#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/util/csv.hpp"
#include "crisismine/util/error.hpp"

namespace cm::geo {

struct Point {
    double lon = 0.0;
    double lat = 0.0;
};

struct SocioProfile {
    double per_capita_income = 0.0;
    double pct_not_higher_ed = 0.0;
    int low_income_flag = 0;
};

// Closed ring(s); first vertex equals last, >= 4 vertices per ring.
struct GeoUnit {
    std::string fips;
    std::string name;
    std::vector<std::vector<Point>> rings;
};

inline bool on_segment(const Point& p, const Point& a, const Point& b) {
    double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (std::abs(cross) > 1e-12) return false;
    double dot = (p.lon - a.lon) * (b.lon - a.lon) + (p.lat - a.lat) * (b.lat - a.lat);
    double len2 = (b.lon - a.lon) * (b.lon - a.lon) + (b.lat - a.lat) * (b.lat - a.lat);
    return dot >= -1e-12 && dot <= len2 + 1e-12;
}

// Even-odd ray casting over all rings; a point on any edge counts inside.
inline bool point_in_unit(const Point& p, const GeoUnit& unit) {
    bool inside = false;
    for (const auto& ring : unit.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const Point& a = ring[i];
            const Point& b = ring[i + 1];
            if (on_segment(p, a, b)) return true;
            // horizontal ray toward +lon
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (x > p.lon) inside = !inside;
            }
        }
    }
    return inside;
}

// First unit in file order containing the point wins.
inline std::optional<std::string> assign_geography(double lon, double lat,
                                                   const std::vector<GeoUnit>& units) {
    Point p{lon, lat};
    for (const auto& u : units) {
        if (point_in_unit(p, u)) return u.fips;
    }
    return std::nullopt;
}

inline void validate_unit(const GeoUnit& u) {
    if (u.rings.empty()) throw DataError("geo unit " + u.fips + " has no rings");
    for (const auto& ring : u.rings) {
        if (ring.size() < 4)
            throw DataError("geo unit " + u.fips + " has a ring with < 4 vertices");
        if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat)
            throw DataError("geo unit " + u.fips + " has an unclosed ring");
    }
}

// GeoJSON-style FeatureCollection of Polygon / MultiPolygon features with
// `fips` and `name` properties.
inline std::vector<GeoUnit> load_geography(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open geography file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw DataError(std::string("invalid geography JSON: ") + e.what());
    }
    std::vector<GeoUnit> units;
    std::map<std::string, bool> seen;
    for (const auto& feat : doc.at("features")) {
        GeoUnit u;
        u.fips = feat.at("properties").at("fips").get<std::string>();
        u.name = feat.at("properties").at("name").get<std::string>();
        if (seen[u.fips]) throw DataError("duplicate fips in geography: " + u.fips);
        seen[u.fips] = true;
        const auto& geom = feat.at("geometry");
        std::string type = geom.at("type").get<std::string>();
        auto read_poly = [&](const nlohmann::json& poly) {
            for (const auto& ring : poly) {
                std::vector<Point> pts;
                for (const auto& v : ring)
                    pts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
                u.rings.push_back(std::move(pts));
            }
        };
        if (type == "Polygon") read_poly(geom.at("coordinates"));
        else if (type == "MultiPolygon")
            for (const auto& poly : geom.at("coordinates")) read_poly(poly);
        else throw DataError("unsupported geometry type: " + type);
        validate_unit(u);
        units.push_back(std::move(u));
    }
    return units;
}

inline bool valid_fips(const std::string& fips) {
    if (fips.size() != 5) return false;
    for (char c : fips)
        if (c < '0' || c > '9') return false;
    return true;
}

// Exact-key lookup; absence is explicit, never defaulted.
inline std::optional<SocioProfile> join_socioeconomics(
    const std::string& fips, const std::map<std::string, SocioProfile>& table) {
    if (!valid_fips(fips)) throw DataError("malformed fips (want 5 digits): " + fips);
    auto it = table.find(fips);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

inline std::map<std::string, SocioProfile> load_socio_table(const std::string& path) {
    auto rows = csv::read_file(path, "fips,per_capita_income,pct_not_higher_ed,low_income_flag");
    std::map<std::string, SocioProfile> table;
    for (const auto& row : rows) {
        if (row.size() != 4) throw DataError("socio table row has wrong field count");
        const std::string& fips = row[0];
        if (!valid_fips(fips)) throw DataError("malformed fips in socio table: " + fips);
        SocioProfile p;
        p.per_capita_income = std::stod(row[1]);
        p.pct_not_higher_ed = std::stod(row[2]);
        p.low_income_flag = std::stoi(row[3]);
        if (p.pct_not_higher_ed < 0.0 || p.pct_not_higher_ed > 1.0)
            throw DataError("pct_not_higher_ed out of [0,1] for fips " + fips);
        if (p.low_income_flag != 0 && p.low_income_flag != 1)
            throw DataError("low_income_flag must be 0/1 for fips " + fips);
        table[fips] = p;
    }
    return table;
}

}  // namespace cm::geo
