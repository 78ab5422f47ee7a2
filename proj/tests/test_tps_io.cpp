#include <doctest.h>

#include <clocale>
#include <cstring>
#include <filesystem>
#include <random>

#include "facemorph/tps_io.hpp"
#include "support.hpp"

using namespace facemorph;
using facemorph::testing::TempDir;

namespace {

std::vector<Specimen> random_specimens(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 256.0);
  std::vector<Specimen> out;
  for (int i = 0; i < n; ++i) {
    Specimen s;
    s.landmarks.resize(kLandmarkCount, 2);
    // Values on the 5-decimal grid so the file is canonical.
    for (Eigen::Index k = 0; k < s.landmarks.size(); ++k) {
      s.landmarks.data()[k] = std::round(u(rng) * 1e5) / 1e5;
    }
    if (i % 3 != 0) s.image_name = "face_" + std::to_string(i) + ".pgm";
    if (i % 4 != 1) s.id = std::to_string(i);
    if (i % 5 == 0) s.scale = 0.25;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("parse minimal record") {
  const auto s = parse_tps("LM=2\n0 0\n1 1\nID=a\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0].landmarks.rows() == 2);
  CHECK(s[0].landmarks(1, 0) == 1.0);
  CHECK(s[0].id == "a");
  CHECK_FALSE(s[0].image_name.has_value());
}

TEST_CASE("parse tolerates CRLF, blank lines, mixed-case keys and stray whitespace") {
  const auto s = parse_tps("  lm=2\r\n 0 0 \r\n1.5\t-2\r\n\r\nimage=a.pgm\r\nId=x\r\nscale=0.5\r\n\r\nLM=1\n3 4\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].landmarks(1, 0) == 1.5);
  CHECK(s[0].landmarks(1, 1) == -2.0);
  CHECK(s[0].image_name == "a.pgm");
  CHECK(s[0].id == "x");
  CHECK(s[0].scale == 0.5);
  CHECK(s[1].landmarks(0, 1) == 4.0);
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse_tps("LM=3\n0 0\n1 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  try {
    parse_tps("LM=2\n0 0\n1 x\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("unknown keys are skipped with a warning") {
  std::vector<std::string> warnings;
  const auto s = parse_tps("LM=1\n0 0\nCOMMENT=hi\n", &warnings);
  CHECK(s.size() == 1);
  CHECK(warnings.size() == 1);
}

TEST_CASE("write formatting") {
  Specimen s;
  s.landmarks = LandmarkConfig(1, 2);
  s.landmarks << 1.0, 2.5;
  CHECK(write_tps({s}) == "LM=1\n1.00000 2.50000\n");
  s.id = "7";
  s.image_name = "a.pgm";
  s.scale = 0.5;
  CHECK(write_tps({s}) == "LM=1\n1.00000 2.50000\nIMAGE=a.pgm\nID=7\nSCALE=0.5\n");
}

TEST_CASE("write refuses non-finite coordinates and names the specimen") {
  auto specimens = random_specimens(3, 1);
  specimens[2].landmarks(5, 1) = std::numeric_limits<double>::infinity();
  try {
    write_tps(specimens);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("specimen 2") != std::string::npos);
  }
}

TEST_CASE("TPS round trips are byte-stable") {
  const auto specimens = random_specimens(100, 42);
  const std::string text = write_tps(specimens);
  CHECK(write_tps(specimens) == text);
  std::vector<std::string> warnings;
  const auto parsed = parse_tps(text, &warnings);
  CHECK(warnings.empty());
  REQUIRE(parsed.size() == specimens.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].landmarks == specimens[i].landmarks);
    CHECK(parsed[i].id == specimens[i].id);
    CHECK(parsed[i].image_name == specimens[i].image_name);
    CHECK(parsed[i].scale == specimens[i].scale);
  }
  CHECK(write_tps(parsed) == text);
}

TEST_CASE("parsing ignores the C locale decimal separator") {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  const bool switched = std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr;
  const auto s = parse_tps("LM=1\n1.25 2.5\n");
  CHECK(s[0].landmarks(0, 0) == 1.25);
  CHECK(write_tps(s) == "LM=1\n1.25000 2.50000\n");
  std::setlocale(LC_NUMERIC, saved.c_str());
  if (!switched) MESSAGE("de_DE locale unavailable; checked under the default locale only");
}

TEST_CASE("slider files") {
  CHECK(parse_sliders("before,slide,after\n2,51,52\n") == std::vector<SliderTriplet>{{2, 51, 52}});
  const auto all = default_sliders(true);
  const std::string text = write_sliders(all);
  CHECK(text.rfind("before,slide,after\n", 0) == 0);
  CHECK(parse_sliders(text) == all);
  CHECK(write_sliders(parse_sliders(text)) == text);
  try {
    parse_sliders("before,slide,after\n0,1,2\n");
    FAIL("expected a range error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse_sliders("before,slide,after\n2,51\n"), ParseError);
}

TEST_CASE("y flip") {
  LandmarkConfig p(1, 2);
  p << 10.0, 20.0;
  const auto t = pixel_to_tps(p, 100.0);
  CHECK(t(0, 0) == 10.0);
  CHECK(t(0, 1) == 80.0);
  CHECK_THROWS_AS(pixel_to_tps(p, 0.0), DataError);

  SUBCASE("x is untouched") {
    std::mt19937_64 rng(3);
    const auto c = facemorph::testing::random_config(rng, kLandmarkCount, 80.0);
    CHECK(pixel_to_tps(c, 256.0).col(0) == c.col(0));
  }
  SUBCASE("involution is bitwise on dyadic coordinates") {
    // H - y is exact when y and H are multiples of 2^-10 of moderate size.
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> k(0, 256 * 1024);
    LandmarkConfig c(kLandmarkCount, 2);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = k(rng) / 1024.0;
    CHECK(tps_to_pixel(pixel_to_tps(c, 256.0), 256.0) == c);
  }
  SUBCASE("involution is exact at 5-decimal text precision") {
    const auto specimens = random_specimens(20, 9);
    auto back = specimens;
    for (auto& s : back) s.landmarks = tps_to_pixel(pixel_to_tps(s.landmarks, 256.0), 256.0);
    CHECK(write_tps(back) == write_tps(specimens));
  }
}

TEST_CASE("atomic write") {
  TempDir dir("atomic");
  const auto path = dir.file("out.tps");
  write_file_atomic(path, "first\n");
  CHECK(read_file(path) == "first\n");

  SUBCASE("failure before rename leaves the target untouched") {
    CHECK_THROWS_AS(write_file_atomic(path, "second\n",
                                      [](const std::string&) { throw std::runtime_error("injected"); }),
                    std::runtime_error);
    CHECK(read_file(path) == "first\n");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  }
  SUBCASE("the hook sees the complete temporary") {
    std::string seen;
    write_file_atomic(path, "second\n", [&](const std::string& temp) { seen = read_file(temp); });
    CHECK(seen == "second\n");
    CHECK(read_file(path) == "second\n");
  }
  CHECK_THROWS_AS(read_file(dir.file("missing.tps")), DataError);
}
