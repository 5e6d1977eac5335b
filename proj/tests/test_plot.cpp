#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "esa/harness.hpp"
#include "esa/plot.hpp"

using namespace esa;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "dominant-baseline" legitimately contains "nan"; blank it out before
// scanning for formatted non-finite numbers.
bool has_nonfinite_number(std::string svg) {
  for (std::size_t pos = svg.find("dominant-baseline"); pos != std::string::npos;
       pos = svg.find("dominant-baseline", pos))
    svg.replace(pos, 17, 17, '_');
  return svg.find("nan") != std::string::npos || svg.find("inf") != std::string::npos;
}

}  // namespace

TEST_CASE("load_regret_csv round-trips the harness writer") {
  RegretRecord rec;
  rec.episode_regret = {0.5, 0.25, 0.125};
  rec.cum_regret = {0.5, 0.75, 0.875};
  const std::filesystem::path path = temp_file("esa_plot_roundtrip.csv");
  write_regret_csv(rec, path.string());

  const RegretCurve curve = load_regret_csv(path.string());
  CHECK(curve.label == "esa_plot_roundtrip");
  REQUIRE(curve.episode.size() == 3);
  CHECK(curve.episode[0] == 0.0);
  CHECK(curve.episode[2] == 2.0);
  CHECK(curve.cum == std::vector<double>{0.5, 0.75, 0.875});
  std::filesystem::remove(path);
}

TEST_CASE("load_regret_csv rejects malformed input") {
  const std::filesystem::path path = temp_file("esa_plot_bad.csv");

  SUBCASE("wrong header") {
    write_text(path, "episode,regret\n0,0.5\n");
    CHECK_THROWS_WITH_AS(load_regret_csv(path.string()), doctest::Contains("header"),
                         std::runtime_error);
  }
  SUBCASE("missing field") {
    write_text(path, "episode,episode_regret,cum_regret\n0,0.5\n");
    CHECK_THROWS_AS(load_regret_csv(path.string()), std::runtime_error);
  }
  SUBCASE("non-numeric field") {
    write_text(path, "episode,episode_regret,cum_regret\n0,half,0.5\n");
    CHECK_THROWS_AS(load_regret_csv(path.string()), std::runtime_error);
  }
  SUBCASE("trailing garbage in a field") {
    write_text(path, "episode,episode_regret,cum_regret\n0,0.5x,0.5\n");
    CHECK_THROWS_AS(load_regret_csv(path.string()), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_regret_csv("/nonexistent/esa.csv"), std::runtime_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("load_regret_csv tolerates CRLF line endings") {
  const std::filesystem::path path = temp_file("esa_plot_crlf.csv");
  write_text(path, "episode,episode_regret,cum_regret\r\n0,1,1\r\n1,0.5,1.5\r\n");
  const RegretCurve curve = load_regret_csv(path.string());
  REQUIRE(curve.cum.size() == 2);
  CHECK(curve.cum[1] == 1.5);
  std::filesystem::remove(path);
}

TEST_CASE("write_regret_svg draws one polyline per curve") {
  RegretCurve a;
  a.label = "esa";
  a.episode = {0, 1, 2, 3};
  a.cum = {0.5, 1.0, 1.4, 1.7};
  RegretCurve b;
  b.label = "ucb<q>";  // must be XML-escaped in the legend
  b.episode = {0, 1, 2, 3};
  b.cum = {0.6, 1.2, 1.9, 2.5};

  const std::filesystem::path path = temp_file("esa_plot_chart.svg");
  write_regret_svg({a, b}, path.string(), false);
  const std::string svg = read_text(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++polylines;
  CHECK(polylines == 2);
  CHECK(svg.find("ucb&lt;q&gt;") != std::string::npos);
  CHECK(svg.find("ucb<q>") == std::string::npos);
  CHECK(!has_nonfinite_number(svg));
  std::filesystem::remove(path);
}

TEST_CASE("loglog mode drops nonpositive points and can run dry") {
  RegretCurve zeros;
  zeros.label = "flat";
  zeros.episode = {0, 1, 2};
  zeros.cum = {0.0, 0.0, 0.0};

  const std::filesystem::path path = temp_file("esa_plot_loglog.svg");
  SUBCASE("all-nonpositive input has nothing to draw") {
    CHECK_THROWS_WITH_AS(write_regret_svg({zeros}, path.string(), true),
                         doctest::Contains("no drawable"), std::runtime_error);
  }
  SUBCASE("mixed input keeps the positive tail") {
    RegretCurve mixed;
    mixed.label = "mixed";
    mixed.episode = {0, 1, 2, 3};
    mixed.cum = {0.0, 0.5, 1.0, 2.0};
    write_regret_svg({zeros, mixed}, path.string(), true);
    const std::string svg = read_text(path);
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
      ++polylines;
    CHECK(polylines == 1);  // the all-zero curve contributes no polyline
    CHECK(!has_nonfinite_number(svg));
  }
  std::filesystem::remove(path);
}

TEST_CASE("empty curve list is rejected") {
  CHECK_THROWS_AS(write_regret_svg({}, temp_file("esa_plot_none.svg").string(), false),
                  std::runtime_error);
}
