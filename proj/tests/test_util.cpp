#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "crisismine/util/csv.hpp"
#include "crisismine/util/digest.hpp"
#include "crisismine/util/error.hpp"
#include "crisismine/util/matrix.hpp"
#include "crisismine/util/rng.hpp"

namespace {

TEST(Rng, Deterministic) {
    cm::Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SplitIndependentOfCallOrder) {
    cm::Rng root(7);
    cm::Rng s1 = root.split(1);
    cm::Rng s2 = root.split(2);
    // split() must not advance the parent, so order cannot matter
    cm::Rng root2(7);
    cm::Rng s2b = root2.split(2);
    cm::Rng s1b = root2.split(1);
    EXPECT_EQ(s1.next_u64(), s1b.next_u64());
    EXPECT_EQ(s2.next_u64(), s2b.next_u64());
}

TEST(Rng, SplitStreamsDiffer) {
    cm::Rng root(7);
    EXPECT_NE(root.split(1).next_u64(), root.split(2).next_u64());
}

TEST(Rng, UniformInRange) {
    cm::Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, NormalMomentsRoughlyStandard) {
    cm::Rng r(11);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double v = r.normal();
        sum += v;
        sq += v * v;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.02);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, TruncatedNormalBounded) {
    cm::Rng r(5);
    for (int i = 0; i < 20000; ++i) {
        double v = r.truncated_normal(0.02);
        ASSERT_LE(std::abs(v), 0.04 + 1e-12);
    }
}

TEST(Rng, ShufflePermutes) {
    cm::Rng r(9);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> orig = v;
    r.shuffle(v);
    EXPECT_NE(v, orig);
    std::multiset<int> a(v.begin(), v.end()), b(orig.begin(), orig.end());
    EXPECT_EQ(a, b);
}

// published FNV-1a 64-bit test vectors
TEST(Digest, KnownVectors) {
    EXPECT_EQ(cm::digest_string(""), "cbf29ce484222325");
    EXPECT_EQ(cm::digest_string("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(cm::digest_string("foobar"), "85944171f73967e8");
}

TEST(Digest, FileMatchesString) {
    std::string path = std::string(CM_FIXTURE_DIR) + "/../tmp_digest.txt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "foobar";
    }
    EXPECT_EQ(cm::digest_file(path), cm::digest_string("foobar"));
    std::remove(path.c_str());
}

TEST(Digest, MissingFileThrows) {
    EXPECT_THROW(cm::digest_file("/nonexistent/x"), cm::DataError);
}

TEST(Csv, SplitPlain) {
    auto f = cm::csv::split_line("a,b,c");
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0], "a");
    EXPECT_EQ(f[2], "c");
}

TEST(Csv, SplitQuoted) {
    auto f = cm::csv::split_line("\"a,b\",\"he said \"\"hi\"\"\",x");
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0], "a,b");
    EXPECT_EQ(f[1], "he said \"hi\"");
    EXPECT_EQ(f[2], "x");
}

TEST(Csv, QuoteRoundTrip) {
    for (const std::string s : {"plain", "with,comma", "with\"quote", "a,\"b\""}) {
        auto f = cm::csv::split_line(cm::csv::quote(s));
        ASSERT_EQ(f.size(), 1u);
        EXPECT_EQ(f[0], s);
    }
}

TEST(Csv, HeaderValidation) {
    std::string path = std::string(CM_FIXTURE_DIR) + "/../tmp_csv.csv";
    {
        std::ofstream out(path);
        out << "a,b\n1,2\n";
    }
    auto rows = cm::csv::read_file(path, "a,b");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0][1], "2");
    EXPECT_THROW(cm::csv::read_file(path, "x,y"), cm::DataError);
    std::remove(path.c_str());
}

TEST(Matrix, MatmulHandChecked) {
    cm::Matrix a(2, 3), b(3, 2);
    double av[] = {1, 2, 3, 4, 5, 6}, bv[] = {7, 8, 9, 10, 11, 12};
    a.data().assign(av, av + 6);
    b.data().assign(bv, bv + 6);
    cm::Matrix c = cm::matmul(a, b);
    EXPECT_DOUBLE_EQ(c(0, 0), 58.0);
    EXPECT_DOUBLE_EQ(c(0, 1), 64.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 139.0);
    EXPECT_DOUBLE_EQ(c(1, 1), 154.0);
}

TEST(Matrix, MatmulShapeMismatchThrows) {
    EXPECT_THROW(cm::matmul(cm::Matrix(2, 3), cm::Matrix(2, 2)), cm::NumericError);
}

TEST(Matrix, TransposeInvolution) {
    cm::Rng r(1);
    cm::Matrix m(4, 7);
    for (double& v : m.data()) v = r.uniform();
    cm::Matrix t = m.transpose().transpose();
    EXPECT_EQ(t.data(), m.data());
}

TEST(Matrix, AllFinite) {
    cm::Matrix m(2, 2, 1.0);
    EXPECT_TRUE(m.all_finite());
    m(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(m.all_finite());
}

TEST(Errors, DistinctTypes) {
    EXPECT_THROW(throw cm::ConfigError("x"), cm::ConfigError);
    EXPECT_THROW(throw cm::DataError("x"), cm::DataError);
    EXPECT_THROW(throw cm::NumericError("x"), cm::NumericError);
}

}  // namespace
