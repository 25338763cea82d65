#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ctxgate/record.hpp"
#include "support.hpp"

namespace ctxgate {
namespace {

TEST(Record, FieldOrderAndRoundTrip) {
  Record r;
  r.add("kind", std::string("eval")).add("seed", std::uint64_t{7}).add("acc", 61.25).add("n", -3);
  EXPECT_EQ(r.str(), "kind=eval seed=7 acc=61.25 n=-3");
  const Record back = Record::parse(r.str());
  EXPECT_EQ(back.fields(), r.fields());
  EXPECT_EQ(back.get_uint("seed"), 7u);
  EXPECT_EQ(back.get_int("n"), -3);
  EXPECT_EQ(back.get_double("acc"), 61.25);
}

TEST(Record, MissingAndMalformedFields) {
  const Record r = Record::parse("a=1 b=x");
  EXPECT_TRUE(r.has("a"));
  EXPECT_FALSE(r.has("c"));
  try {
    r.get("c");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos);
  }
  EXPECT_THROW(r.get_int("b"), ConfigError);
  EXPECT_THROW(r.get_double("b"), ConfigError);
  EXPECT_THROW(Record::parse("a=1 junk"), ConfigError);
  EXPECT_THROW(Record::parse("=5"), ConfigError);
}

TEST(Record, EmptyValueAndExtraSpaces) {
  const Record r = Record::parse("  a=  b=2 ");
  EXPECT_EQ(r.get("a"), "");
  EXPECT_EQ(r.get("b"), "2");
}

TEST(Numbers, HexRoundTripIsExact) {
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int k = 0; k < 10000; ++k) {
    const double v = g(rng) * std::pow(10.0, static_cast<int>(k % 40) - 20);
    EXPECT_EQ(parse_hex(format_hex(v)), v);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  for (double v : {0.0, -0.0, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max(), -1.5}) {
    EXPECT_EQ(parse_hex(format_hex(v)), v);
    EXPECT_EQ(std::signbit(parse_hex(format_hex(v))), std::signbit(v));
  }
  EXPECT_EQ(format_hex(1.5), "0x1.8p+0");
  EXPECT_THROW(format_hex(std::nan("")), ConfigError);
}

TEST(Numbers, HexListRoundTrip) {
  const std::vector<double> v = {1.0, -0.25, 3.0e-300, 12345.678};
  EXPECT_EQ(parse_hex_list(format_hex_list(v)), v);
  EXPECT_TRUE(parse_hex_list("").empty());
  EXPECT_THROW(parse_hex_list("0x1p+0,zz"), ConfigError);
}

TEST(Numbers, Hex64IsFixedWidth) {
  EXPECT_EQ(hex64(0), "0000000000000000");
  EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
}

}  // namespace
}  // namespace ctxgate
