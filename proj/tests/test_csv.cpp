#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "drivprim/csv.hpp"

using namespace drivprim;

TEST(Csv, ParseDoubleIsStrict) {
  EXPECT_EQ(csv::parse_double("1.5"), 1.5);
  EXPECT_EQ(csv::parse_double(" -2e3 "), -2000.0);
  EXPECT_EQ(csv::parse_double("+4"), 4.0);
  EXPECT_FALSE(csv::parse_double(""));
  EXPECT_FALSE(csv::parse_double("  "));
  EXPECT_FALSE(csv::parse_double("1.5x"));
  EXPECT_FALSE(csv::parse_double("nan"));
  EXPECT_FALSE(csv::parse_double("inf"));
  EXPECT_FALSE(csv::parse_double("1,5"));
}

TEST(Csv, ParseInt) {
  EXPECT_EQ(csv::parse_int("42"), 42);
  EXPECT_EQ(csv::parse_int("-3"), -3);
  EXPECT_FALSE(csv::parse_int("4.0"));
  EXPECT_FALSE(csv::parse_int(""));
}

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, (i % 21) - 10);
    EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double(10.0), "10");
}

TEST(Csv, LinesStripCarriageReturns) {
  const auto rows = csv::lines("a,b\r\nc,d\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "a,b");
  EXPECT_EQ(rows[1], "c,d");
}

TEST(Csv, SplitKeepsEmptyFields) {
  const auto f = csv::split("1,,3");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "");
}

TEST(Csv, ReadMissingFileThrows) { EXPECT_THROW(csv::read_file("/nonexistent/file.csv"), std::runtime_error); }
