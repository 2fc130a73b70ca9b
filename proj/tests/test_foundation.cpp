#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "reviewkit/csv.hpp"
#include "reviewkit/decimal.hpp"
#include "reviewkit/digest.hpp"
#include "reviewkit/jsonio.hpp"
#include "reviewkit/rng.hpp"
#include "reviewkit/time.hpp"

using namespace reviewkit;

TEST_CASE("decimal parse and canonical form") {
  CHECK(Decimal::parse("7")->micros() == 7000000);
  CHECK(Decimal::parse("7.5")->micros() == 7500000);
  CHECK(Decimal::parse("-0.25")->micros() == -250000);
  CHECK(Decimal::parse("10.000001")->micros() == 10000001);
  CHECK(Decimal::parse("0")->micros() == 0);

  CHECK_FALSE(Decimal::parse(""));
  CHECK_FALSE(Decimal::parse("-"));
  CHECK_FALSE(Decimal::parse("1."));
  CHECK_FALSE(Decimal::parse(".5"));
  CHECK_FALSE(Decimal::parse("+5"));
  CHECK_FALSE(Decimal::parse("1e3"));
  CHECK_FALSE(Decimal::parse("1.0000001"));  // seven fractional digits
  CHECK_FALSE(Decimal::parse("5 "));
  CHECK_FALSE(Decimal::parse(" 5"));

  CHECK(Decimal::parse("6")->str() == "6");
  CHECK(Decimal::parse("6.500000")->str() == "6.5");
  CHECK(Decimal::parse("-0.250000")->str() == "-0.25");
  CHECK(Decimal::from_micros(0).str() == "0");
  CHECK(Decimal::from_double(7.5).micros() == 7500000);
}

TEST_CASE("decimal arithmetic and ordering") {
  auto a = *Decimal::parse("2.5");
  auto b = *Decimal::parse("0.2");
  CHECK((a + b).str() == "2.7");
  CHECK((a - b).str() == "2.3");
  CHECK((-a).str() == "-2.5");
  CHECK(b < a);
  CHECK(a == *Decimal::parse("2.50"));
}

TEST_CASE("exact means format to at most nine digits") {
  // (6 + 8) / 2 = 7
  CHECK(format_mean(14000000, 2) == "7");
  // (6 + 7) / 2 = 6.5
  CHECK(format_mean(13000000, 2) == "6.5");
  // 1/3 and 2/3 round to nine digits
  CHECK(format_mean(1000000, 3) == "0.333333333");
  CHECK(format_mean(2000000, 3) == "0.666666667");
  CHECK(format_mean(-1000000, 3) == "-0.333333333");
  // a tie at the ninth digit rounds away from zero
  CHECK(format_mean(1, 2000) == "0.000000001");
  CHECK(format_mean(-1, 2000) == "-0.000000001");
  // formatted value stays within 5e-10 of the true mean
  double truth = 1.0 / 3.0;
  CHECK(std::abs(std::stod(format_mean(1000000, 3)) - truth) <= 5e-10);

  MeanAccumulator acc;
  acc.add(*Decimal::parse("6"));
  acc.add(*Decimal::parse("8"));
  CHECK(format_mean(acc) == "7");
  CHECK(acc.value() == Catch::Approx(7.0));
}

TEST_CASE("utc time parse, format, validate") {
  auto t = UtcTime::parse("2025-03-01T12:30:45Z");
  REQUIRE(t);
  CHECK(t->str() == "2025-03-01T12:30:45Z");
  CHECK(t->compact() == "20250301T123045Z");
  CHECK(UtcTime::parse_compact("20250301T123045Z")->secs == t->secs);

  CHECK(UtcTime::parse("2024-02-29T00:00:00Z"));   // leap year
  CHECK_FALSE(UtcTime::parse("2023-02-29T00:00:00Z"));
  CHECK_FALSE(UtcTime::parse("2025-13-01T00:00:00Z"));
  CHECK_FALSE(UtcTime::parse("2025-04-31T00:00:00Z"));
  CHECK_FALSE(UtcTime::parse("2025-03-01T24:00:00Z"));
  CHECK_FALSE(UtcTime::parse("2025-03-01 12:30:45Z"));
  CHECK_FALSE(UtcTime::parse("2025-03-01T12:30:45"));

  CHECK(UtcTime::parse("1970-01-01T00:00:00Z")->secs == 0);
  CHECK(UtcTime::parse("1970-01-02T00:00:00Z")->secs == 86400);

  auto later = *t + 3600;
  CHECK(later - *t == 3600);
  CHECK(*t < later);
}

TEST_CASE("utc time round trips across a wide range") {
  for (int64_t secs : {int64_t{0}, int64_t{951827696}, int64_t{1730000000},
                       int64_t{4102444799}, int64_t{-86400}}) {
    UtcTime t{secs};
    auto back = UtcTime::parse(t.str());
    REQUIRE(back);
    CHECK(back->secs == secs);
  }
}

TEST_CASE("json writer preserves insertion order and escapes minimally") {
  JsonValue obj = JsonValue::object();
  obj.set("zeta", JsonValue(int64_t{1}));
  obj.set("alpha", JsonValue("two"));
  obj.set("tab\there", JsonValue(nullptr));
  CHECK(obj.dump_compact() == "{\"zeta\":1,\"alpha\":\"two\",\"tab\\there\":null}");

  JsonValue arr = JsonValue::array();
  arr.push(JsonValue(true));
  arr.push(JsonValue(*Decimal::parse("2.50")));
  arr.push(JsonValue::number_token("0.333333333"));
  CHECK(arr.dump_compact() == "[true,2.5,0.333333333]");

  JsonValue esc = JsonValue::object();
  esc.set("s", JsonValue(std::string("a\"b\\c\n\x01") + "\xC3\xA9"));
  CHECK(esc.dump_compact() == "{\"s\":\"a\\\"b\\\\c\\n\\u0001\xC3\xA9\"}");
}

TEST_CASE("json pretty form is stable") {
  JsonValue obj = JsonValue::object();
  obj.set("a", JsonValue(int64_t{1}));
  JsonValue inner = JsonValue::array();
  inner.push(JsonValue(int64_t{2}));
  obj.set("b", std::move(inner));
  CHECK(obj.dump_pretty() == "{\n  \"a\": 1,\n  \"b\": [\n    2\n  ]\n}\n");
  CHECK(JsonValue::object().dump_pretty() == "{}\n");
}

TEST_CASE("json parse failures carry a reason") {
  CHECK_THROWS_AS(parse_json("{nope", "test"), Error);
  auto j = parse_json("{\"k\": [1, 2]}", "test");
  CHECK(j.at("k").size() == 2);
}

TEST_CASE("from_parsed bridges nlohmann values") {
  auto j = parse_json("{\"b\":2,\"a\":[null,true,\"x\"]}", "test");
  // nlohmann objects iterate sorted by key
  CHECK(JsonValue::from_parsed(j).dump_compact() == "{\"a\":[null,true,\"x\"],\"b\":2}");
}

TEST_CASE("splitmix64 matches the reference sequence") {
  SplitMix64 rng(0);
  CHECK(rng.next() == UINT64_C(0xE220A8397B1DCDAF));
  CHECK(rng.next() == UINT64_C(0x6E789E6AA1B965F4));
  CHECK(rng.next() == UINT64_C(0x06C45D188009454F));

  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  SplitMix64 parent(7);
  auto child = parent.split();
  double d = child.next_double();
  CHECK(d >= 0.0);
  CHECK(d < 1.0);
  for (int i = 0; i < 1000; ++i) {
    auto v = parent.next_below(13);
    CHECK(v < 13);
  }
  for (int i = 0; i < 100; ++i) {
    double x = parent.next_range(2.0, 3.0);
    CHECK(x >= 2.0);
    CHECK(x < 3.0);
  }
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv parser handles quoting") {
  std::istringstream in("a,b,c\r\n\"x,1\",\"he said \"\"hi\"\"\",\"line\nbreak\"\nlast,,\n");
  auto rows = parse_csv(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1][0] == "x,1");
  CHECK(rows[1][1] == "he said \"hi\"");
  CHECK(rows[1][2] == "line\nbreak");
  CHECK(rows[2] == std::vector<std::string>{"last", "", ""});

  CHECK(csv_row({"a", "x,1", "q\"q"}) == "a,\"x,1\",\"q\"\"q\"\n");
}
