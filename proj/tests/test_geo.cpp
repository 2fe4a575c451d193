#include <gtest/gtest.h>

#include "crisismine/geo/geo.hpp"
#include "crisismine/util/rng.hpp"

namespace {

using cm::geo::GeoUnit;
using cm::geo::Point;

GeoUnit unit_square(const std::string& fips = "00001") {
    GeoUnit u;
    u.fips = fips;
    u.name = "square";
    u.rings = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
    return u;
}

TEST(PointInPolygon, Center) {
    EXPECT_TRUE(cm::geo::point_in_unit({0.5, 0.5}, unit_square()));
}

TEST(PointInPolygon, Outside) {
    EXPECT_FALSE(cm::geo::point_in_unit({2, 2}, unit_square()));
    EXPECT_FALSE(cm::geo::point_in_unit({-0.1, 0.5}, unit_square()));
}

TEST(PointInPolygon, BoundaryCountsInside) {
    EXPECT_TRUE(cm::geo::point_in_unit({0.5, 0.0}, unit_square()));
    EXPECT_TRUE(cm::geo::point_in_unit({0.0, 0.0}, unit_square()));  // vertex
    EXPECT_TRUE(cm::geo::point_in_unit({1.0, 0.5}, unit_square()));
}

TEST(PointInPolygon, ConcavePolygon) {
    GeoUnit u;
    u.fips = "00002";
    // U-shape: notch from above between lon 1 and 2
    u.rings = {{{0, 0}, {3, 0}, {3, 2}, {2, 2}, {2, 1}, {1, 1}, {1, 2}, {0, 2}, {0, 0}}};
    EXPECT_TRUE(cm::geo::point_in_unit({0.5, 1.5}, u));
    EXPECT_FALSE(cm::geo::point_in_unit({1.5, 1.5}, u));  // inside the notch
    EXPECT_TRUE(cm::geo::point_in_unit({1.5, 0.5}, u));
}

// ray-casting result is invariant under cyclic rotation of the vertex ring
TEST(PointInPolygon, CyclicRotationInvariance) {
    std::vector<Point> base = {{0, 0}, {4, 1}, {5, 4}, {2, 6}, {-1, 3}};
    cm::Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        Point p{rng.uniform() * 8 - 2, rng.uniform() * 8 - 1};
        int expected = -1;
        for (std::size_t rot = 0; rot < base.size(); ++rot) {
            std::vector<Point> ring;
            for (std::size_t i = 0; i < base.size(); ++i)
                ring.push_back(base[(i + rot) % base.size()]);
            ring.push_back(ring.front());
            GeoUnit u;
            u.fips = "00003";
            u.rings = {ring};
            int got = cm::geo::point_in_unit(p, u) ? 1 : 0;
            if (expected < 0) expected = got;
            ASSERT_EQ(got, expected) << "rot=" << rot << " p=(" << p.lon << "," << p.lat << ")";
        }
    }
}

TEST(AssignGeography, FirstUnitInFileOrderWins) {
    GeoUnit a = unit_square("11111"), b = unit_square("22222");
    auto fips = cm::geo::assign_geography(0.5, 0.5, {a, b});
    ASSERT_TRUE(fips.has_value());
    EXPECT_EQ(*fips, "11111");
    EXPECT_FALSE(cm::geo::assign_geography(9, 9, {a, b}).has_value());
}

TEST(ValidateUnit, RejectsBadRings) {
    GeoUnit u = unit_square();
    EXPECT_NO_THROW(cm::geo::validate_unit(u));
    u.rings[0].pop_back();  // unclosed
    EXPECT_THROW(cm::geo::validate_unit(u), cm::DataError);
    u.rings = {{{0, 0}, {1, 1}, {0, 0}}};  // too few vertices
    EXPECT_THROW(cm::geo::validate_unit(u), cm::DataError);
    u.rings.clear();
    EXPECT_THROW(cm::geo::validate_unit(u), cm::DataError);
}

TEST(LoadGeography, FixtureFile) {
    auto units = cm::geo::load_geography(std::string(CM_FIXTURE_DIR) + "/geography.json");
    ASSERT_EQ(units.size(), 3u);
    EXPECT_EQ(units[0].fips, "36061");
    auto fips = cm::geo::assign_geography(-74.0, 40.75, units);
    ASSERT_TRUE(fips.has_value());
    EXPECT_EQ(*fips, "36061");
}

TEST(Socio, JoinAndValidation) {
    auto table = cm::geo::load_socio_table(std::string(CM_FIXTURE_DIR) + "/socio.csv");
    auto hit = cm::geo::join_socioeconomics("36061", table);
    ASSERT_TRUE(hit.has_value());
    EXPECT_DOUBLE_EQ(hit->per_capita_income, 68000.0);
    EXPECT_EQ(hit->low_income_flag, 0);
    EXPECT_FALSE(cm::geo::join_socioeconomics("99999", table).has_value());
    EXPECT_THROW(cm::geo::join_socioeconomics("3606", table), cm::DataError);
    EXPECT_THROW(cm::geo::join_socioeconomics("3606a", table), cm::DataError);
}

}  // namespace
