#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "dspect/io.hpp"

using namespace dspect;

TEST_CASE("dense header and payload layout") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const std::string bytes = encode_dense(m);
  const std::string head = "DSPT1 f64le 2,3\n";
  REQUIRE(bytes.rfind(head, 0) == 0);
  CHECK(bytes.size() == head.size() + 6 * 8);
  double second = 0.0;
  std::memcpy(&second, bytes.data() + head.size() + 8, 8);
  CHECK(second == 2.0);  // row-major
}

TEST_CASE("dense round trip is bit exact") {
  Matrix m(3, 2);
  m << 0.1, -0.0, std::numeric_limits<double>::infinity(), 1e-310, std::nextafter(1.0, 2.0), -7.25;
  const DenseArray arr = decode_dense(encode_dense(m));
  REQUIRE(arr.shape == std::vector<Index>{3, 2});
  for (Index r = 0; r < 3; ++r) {
    for (Index c = 0; c < 2; ++c) {
      const double a = arr.f64[static_cast<std::size_t>(r * 2 + c)];
      const double b = m(r, c);
      CHECK(std::memcmp(&a, &b, 8) == 0);
    }
  }
  const std::vector<int> ints{1, -2, 3, 2147483647};
  const DenseArray i = decode_dense(encode_dense(ints, {2, 2}));
  CHECK(i.dtype == "i32le");
  CHECK(std::vector<int>(i.i32.begin(), i.i32.end()) == ints);
}

TEST_CASE("malformed dense files are rejected") {
  CHECK_THROWS_AS(decode_dense("DSPT1 f64le 2"), FormatError);
  CHECK_THROWS_AS(decode_dense("DSPT2 f64le 1\n12345678"), FormatError);
  CHECK_THROWS_AS(decode_dense("DSPT1 f32le 1\n1234"), FormatError);
  CHECK_THROWS_AS(decode_dense("DSPT1 f64le 2\n12345678"), FormatError);
  CHECK_THROWS_AS(decode_dense("DSPT1 f64le 1,x\n12345678"), FormatError);
  CHECK_THROWS_AS(encode_dense(std::vector<int>{1, 2}, {3}), std::invalid_argument);
}

TEST_CASE("CSV keeps doubles exactly") {
  Matrix m(2, 2);
  m << 0.1, 1.0 / 3.0, 1e-300, -2.5;
  const std::string csv = matrix_csv(m, {"a", "b"});
  CHECK(csv.rfind("a,b\n", 0) == 0);
  CHECK(parse_matrix_csv(csv) == m);
  CHECK_THROWS_AS(parse_matrix_csv("a,b\n1,2\n3\n"), FormatError);
  CHECK_THROWS_AS(parse_matrix_csv("a\n1x\n"), FormatError);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
