#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "crlm/core/matrix.hpp"
#include "crlm/core/numeric.hpp"
#include "crlm/core/rng.hpp"
#include "crlm/core/text.hpp"
#include "test_util.hpp"

using namespace crlm;

TEST(Text, CsvQuotingRoundTrips) {
    const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", ""};
    const auto line = join_csv(fields);
    EXPECT_EQ(split_csv_line(line), fields);
}

TEST(Text, ParseDoubleRejectsJunk) {
    EXPECT_EQ(parse_double(" 2.5 ").value(), 2.5);
    EXPECT_FALSE(parse_double("2.5x").has_value());
    EXPECT_FALSE(parse_double("").has_value());
}

TEST(Text, FormatDoubleIsShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 62.1, -1e-300, 12345678.9}) EXPECT_EQ(*parse_double(format_double(v)), v);
}

TEST(Text, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Numeric, SampleAndPopulationSd) {
    const std::vector<double> x = {60, 64};
    EXPECT_DOUBLE_EQ(numeric::mean(x), 62.0);
    EXPECT_NEAR(numeric::sample_sd(x), 2.8284271247, 1e-9);
    EXPECT_DOUBLE_EQ(numeric::population_sd(x), 2.0);
    EXPECT_DOUBLE_EQ(numeric::median({1, 2, 100}), 2.0);
    EXPECT_DOUBLE_EQ(numeric::median({4, 1, 3, 2}), 2.5);
    EXPECT_CODE(numeric::mean(std::vector<double>{}), ErrorCode::EmptyInput);
}

TEST(Numeric, ChiSquareTail) {
    EXPECT_NEAR(numeric::chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_NEAR(numeric::two_sided_normal_p(1.959963984540054), 0.05, 1e-12);
}

TEST(Rng, DeterministicPerSeedAndStream) {
    Rng a(42), b(42), c(derive_seed(42, 1));
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        differs |= x != c.uniform();
    }
    EXPECT_TRUE(differs);
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(Rng, IndexIsUnbiasedEnough) {
    Rng r(7);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[r.index(5)];
    for (int c : counts) EXPECT_NEAR(c / 50000.0, 0.2, 0.01);
}

TEST(Rng, NormalMoments) {
    Rng r(11);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Matrix, RaggedRowsRejected) {
    EXPECT_CODE(Matrix::from_rows({{1, 2}, {3}}), ErrorCode::DimensionMismatch);
    const auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
    const std::vector<std::size_t> idx = {2, 0};
    const auto s = m.select_rows(idx);
    EXPECT_EQ(s(0, 1), 6);
    EXPECT_EQ(s(1, 0), 1);
    EXPECT_EQ(m.column(1), (std::vector<double>{2, 4, 6}));
}

TEST(Error, MessageOmitsCodePrefix) {
    const Error e(ErrorCode::DuplicateId, "dup P001");
    EXPECT_EQ(e.message(), "dup P001");
    EXPECT_EQ(std::string(e.what()), "DuplicateId: dup P001");
}
