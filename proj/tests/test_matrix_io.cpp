#include "test_util.hpp"

#include "mdcr/matrix_io.hpp"
#include "mdcr/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>

using namespace mdcr;
using testutil::TempDir;

namespace {

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string binary_matrix_bytes(std::uint64_t rows, std::uint64_t cols,
                                const std::vector<double>& payload) {
  std::string bytes = "MDCRMAT1";
  bytes.append(reinterpret_cast<const char*>(&rows), 8);
  bytes.append(reinterpret_cast<const char*>(&cols), 8);
  bytes.append(reinterpret_cast<const char*>(payload.data()),
               payload.size() * sizeof(double));
  return bytes;
}

}  // namespace

TEST_CASE("text matrix file is transcribed exactly", "[matrix_io]") {
  TempDir dir;
  write_bytes(dir.file("m.txt"), "2 3\n1 2 3\n4 5 6\n");
  const Matrix m = load_matrix(dir.file("m.txt"));
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  REQUIRE(m(0, 0) == 1.0);
  REQUIRE(m(0, 1) == 2.0);
  REQUIRE(m(0, 2) == 3.0);
  REQUIRE(m(1, 0) == 4.0);
  REQUIRE(m(1, 1) == 5.0);
  REQUIRE(m(1, 2) == 6.0);
}

TEST_CASE("hand-built binary 1x1 file loads", "[matrix_io]") {
  TempDir dir;
  write_bytes(dir.file("m.bin"), binary_matrix_bytes(1, 1, {0.0}));
  const Matrix m = load_matrix(dir.file("m.bin"));
  REQUIRE(m.rows() == 1);
  REQUIRE(m.cols() == 1);
  REQUIRE(m(0, 0) == 0.0);
}

TEST_CASE("binary round trip is bitwise exact", "[matrix_io]") {
  TempDir dir;
  GaussianSampler gauss(99);
  Matrix m(7, 5);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss();
  save_matrix(m, dir.file("m.bin"), MatrixFormat::Binary);
  const Matrix back = load_matrix(dir.file("m.bin"));
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      // compare bit patterns, not values, to catch any quiet conversion
      std::uint64_t a, b;
      std::memcpy(&a, &m(i, j), 8);
      std::memcpy(&b, &back(i, j), 8);
      REQUIRE(a == b);
    }
}

TEST_CASE("text round trip reproduces doubles", "[matrix_io]") {
  TempDir dir;
  GaussianSampler gauss(3);
  Matrix m(4, 3);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss() * 1e3;
  save_matrix(m, dir.file("m.txt"), MatrixFormat::Text);
  const Matrix back = load_matrix(dir.file("m.txt"));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      REQUIRE(std::abs(back(i, j) - m(i, j)) <= 1e-12 * std::abs(m(i, j)));
}

TEST_CASE("format sniffing distinguishes text and binary", "[matrix_io]") {
  TempDir dir;
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  save_matrix(m, dir.file("a.bin"), MatrixFormat::Binary);
  save_matrix(m, dir.file("a.txt"), MatrixFormat::Text);
  REQUIRE(load_matrix(dir.file("a.bin")) == m);
  REQUIRE(load_matrix(dir.file("a.txt")) == m);
}

TEST_CASE("text loader reports malformed files with positions",
          "[matrix_io]") {
  TempDir dir;
  SECTION("missing row") {
    write_bytes(dir.file("m.txt"), "3 2\n1 2\n3 4\n");
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.txt")),
                        Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("short row") {
    write_bytes(dir.file("m.txt"), "2 3\n1 2 3\n4 5\n");
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.txt")),
                        Catch::Matchers::ContainsSubstring("row 2"));
  }
  SECTION("extra values in a row") {
    write_bytes(dir.file("m.txt"), "1 2\n1 2 3\n");
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.txt")),
                        Catch::Matchers::ContainsSubstring("trailing"));
  }
  SECTION("non-finite entry named by position") {
    write_bytes(dir.file("m.txt"), "2 2\n1 2\n3 nan\n");
    REQUIRE_THROWS_WITH(
        load_matrix(dir.file("m.txt")),
        Catch::Matchers::ContainsSubstring("row 2, column 2"));
  }
  SECTION("bad header") {
    write_bytes(dir.file("m.txt"), "2\n1\n2\n");
    REQUIRE_THROWS_AS(load_matrix(dir.file("m.txt")), IoError);
  }
  SECTION("empty matrix") {
    write_bytes(dir.file("m.txt"), "0 3\n");
    REQUIRE_THROWS_AS(load_matrix(dir.file("m.txt")), IoError);
  }
  SECTION("trailing rows") {
    write_bytes(dir.file("m.txt"), "1 2\n1 2\n3 4\n");
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.txt")),
                        Catch::Matchers::ContainsSubstring("trailing"));
  }
}

TEST_CASE("binary loader rejects corrupt files", "[matrix_io]") {
  TempDir dir;
  SECTION("bad magic") {
    write_bytes(dir.file("m.bin"), "NOTMYFMT\x01\x02");
    REQUIRE_THROWS_WITH(
        load_matrix(dir.file("m.bin"), MatrixFormat::Binary),
        Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("truncated payload") {
    write_bytes(dir.file("m.bin"), binary_matrix_bytes(2, 2, {1.0, 2.0, 3.0}));
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.bin")),
                        Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("trailing garbage") {
    std::string bytes = binary_matrix_bytes(1, 1, {1.0});
    bytes += "x";
    write_bytes(dir.file("m.bin"), bytes);
    REQUIRE_THROWS_WITH(load_matrix(dir.file("m.bin")),
                        Catch::Matchers::ContainsSubstring("trailing"));
  }
  SECTION("non-finite payload named by position") {
    const double inf = std::numeric_limits<double>::infinity();
    write_bytes(dir.file("m.bin"), binary_matrix_bytes(2, 1, {1.0, inf}));
    REQUIRE_THROWS_WITH(
        load_matrix(dir.file("m.bin")),
        Catch::Matchers::ContainsSubstring("row 2, column 1"));
  }
}

TEST_CASE("save_matrix refuses non-finite values", "[matrix_io]") {
  TempDir dir;
  Matrix m(1, 2);
  m << 1.0, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(save_matrix(m, dir.file("m.bin"), MatrixFormat::Binary),
                    ValidationError);
}

TEST_CASE("label files parse one integer per line", "[matrix_io]") {
  TempDir dir;
  write_bytes(dir.file("y.txt"), "3\n1\n-2\n10\n");
  REQUIRE(load_labels(dir.file("y.txt")) ==
          std::vector<long long>{3, 1, -2, 10});

  write_bytes(dir.file("trail.txt"), "1\n2\n\n");
  REQUIRE(load_labels(dir.file("trail.txt")).size() == 2);

  write_bytes(dir.file("bad.txt"), "1\ntwo\n3\n");
  REQUIRE_THROWS_WITH(load_labels(dir.file("bad.txt")),
                      Catch::Matchers::ContainsSubstring("line 2"));

  save_labels({5, 6, 7}, dir.file("roundtrip.txt"));
  REQUIRE(load_labels(dir.file("roundtrip.txt")) ==
          std::vector<long long>{5, 6, 7});
}
