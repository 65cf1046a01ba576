#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "qilab/common.hpp"
#include "qilab/csvio.hpp"

using namespace qilab;

TEST_CASE("rng matches the published splitmix64 sequence for seed 0") {
  Rng rng(0);
  CHECK(rng.next_u64() == UINT64_C(0xE220A8397B1DCDAF));
  CHECK(rng.next_u64() == UINT64_C(0x6E789E6AA1B965F4));
  CHECK(rng.next_u64() == UINT64_C(0x06C45D188009454F));
}

TEST_CASE("uniform uses the top 53 bits") {
  Rng rng(0);
  const double u = rng.uniform();
  const double expected =
      static_cast<double>(UINT64_C(0xE220A8397B1DCDAF) >> 11) * 0x1.0p-53;
  CHECK(u == expected);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("uniform range and below stay in bounds") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(2.0, 5.0);
    CHECK(v >= 2.0);
    CHECK(v < 5.0);
    CHECK(rng.below(10) < 10);
  }
}

TEST_CASE("derived streams are deterministic and distinct") {
  const Rng base(42);
  Rng a1 = base.derive("alpha");
  Rng a2 = base.derive("alpha");
  Rng b = base.derive("beta");
  const uint64_t x1 = a1.next_u64();
  CHECK(x1 == a2.next_u64());
  CHECK(x1 != b.next_u64());
  Rng c1 = base.derive(uint64_t{5});
  Rng c2 = base.derive(uint64_t{6});
  CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("normal draws have sane moments") {
  Rng rng(123);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::fabs(s / n) < 0.03);
  CHECK(std::fabs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("format_double round-trips exactly") {
  const double values[] = {0.1,     1.0 / 3.0, 1e300,         5e-324,
                           -0.0,    3.141592653589793, 2e6,   -17.25,
                           1.0e-9,  123456789.123456789};
  for (double v : values) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}

TEST_CASE("hash64 matches FNV-1a reference values") {
  CHECK(hash64("") == UINT64_C(0xcbf29ce484222325));
  CHECK(hash64("a") == UINT64_C(0xaf63dc4c8601ec8c));
  CHECK(hash64("ab") != hash64("ba"));
}

TEST_CASE("errors carry their kind and message") {
  try {
    throw Error(ErrorKind::size_cap, "too big");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size_cap);
    CHECK(std::string(e.what()).find("too big") != std::string::npos);
  }
}

TEST_CASE("csv quoting follows RFC 4180") {
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_quote("line\nbreak") == "\"line\nbreak\"");
  CHECK(csv_line({"a", "b,c", "d"}) == "a,\"b,c\",d");
}

TEST_CASE("read_csv handles quoting, CRLF, and trailing rows") {
  const auto rows = read_csv_text("a,b\r\n1,\"x,y\"\r\n\"he said \"\"hi\"\"\",2\n\"l1\nl2\",3");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"a", "b"});
  CHECK(rows[1] == std::vector<std::string>{"1", "x,y"});
  CHECK(rows[2] == std::vector<std::string>{"he said \"hi\"", "2"});
  CHECK(rows[3] == std::vector<std::string>{"l1\nl2", "3"});
}

TEST_CASE("read_csv rejects an unterminated quote") {
  CHECK_THROWS_AS((void)read_csv_text("a,\"oops"), Error);
}

TEST_CASE("flat config parsing") {
  const auto kv = parse_flat_config(
      "# comment line\n"
      "  key = value  \n"
      "empty =\n"
      "path = /tmp/x y.csv\n"
      "\n");
  CHECK(kv.at("key") == "value");
  CHECK(kv.at("empty") == "");
  CHECK(kv.at("path") == "/tmp/x y.csv");
  CHECK_THROWS_AS((void)parse_flat_config("no equals sign"), Error);
}

TEST_CASE("csv writer writes rows to disk") {
  const std::string path = "/tmp/qilab_test_writer.csv";
  {
    CsvWriter w(path);
    w.row({"h1", "h2"});
    w.row({"1", "a,b"});
  }
  const auto rows = read_csv(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "a,b");
  std::remove(path.c_str());
}
