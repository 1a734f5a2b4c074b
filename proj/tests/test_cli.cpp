#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "condep/copula.hpp"
#include "condep/csv.hpp"
#include "condep/rng.hpp"

using namespace condep;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(CONDEP_CLI_PATH) + " " + args + " > /dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 12 distinct covariate levels with 64 rows each
void write_grouped_csv(const std::string& path) {
  std::ofstream out(path);
  out << "y1,y2,rc\n";
  copula::CopulaSpec spec(copula::Family::Gaussian, 0.5);
  for (int l = 0; l < 12; ++l) {
    auto s = copula::sample_copula(spec, 64, 900 + l);
    for (int i = 0; i < 64; ++i)
      out << s.u1[i] << "," << s.u2[i] << "," << 0.62 + 0.02 * l << "\n";
  }
}

}  // namespace

TEST_CASE("csv writer and reader round trip") {
  const std::string path = "/tmp/condep_roundtrip.csv";
  std::vector<std::string> cols{"a", "b"};
  std::vector<std::vector<double>> rows{{1.5, -2.25},
                                        {1.0 / 3.0, 1e-17},
                                        {123456.789, -0.0001}};
  csv::write_csv(path, cols, rows);
  auto table = csv::read_csv(path);
  CHECK(table.columns == cols);
  REQUIRE(table.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(table.rows[i][j] == rows[i][j]);  // exact, written at full precision
}

TEST_CASE("csv reader drops incomplete rows and flags bad cells") {
  {
    std::ofstream out("/tmp/condep_bad.csv");
    out << "y1,y2,x\n1,2,3\n4,,6\n7,8,9\n";
  }
  auto t = csv::read_csv("/tmp/condep_bad.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.dropped_rows == 1);
  CHECK_THROWS_AS(t.column_index("nope"), condep::data_error);

  {
    std::ofstream out("/tmp/condep_bad2.csv");
    out << "y1,y2\n1,oops\n";
  }
  CHECK_THROWS_AS(csv::read_csv("/tmp/condep_bad2.csv"), condep::data_error);
}

TEST_CASE("grouped ingestion produces one level per distinct value") {
  write_grouped_csv("/tmp/condep_grouped.csv");
  int rc = run_cli(
      "run --input /tmp/condep_grouped.csv --covariates rc --method gp "
      "--grid 12 --seed 5 --out /tmp/condep_g");
  REQUIRE(rc == 0);
  auto manifest = nlohmann::json::parse(slurp("/tmp/condep_g_manifest.json"));
  CHECK(manifest["data"]["levels"] == 12);
  CHECK(manifest["data"]["rows_used"] == 768);
  CHECK(manifest["data"]["rows_dropped"] == 0);
  CHECK(manifest["config"]["seed"] == 5);

  auto curve = csv::read_csv("/tmp/condep_g_curve.csv");
  CHECK(curve.rows.size() == 12);
  CHECK(curve.columns.front() == "x1");
  // grid is sorted
  for (std::size_t i = 1; i < curve.rows.size(); ++i)
    CHECK(curve.rows[i][0] > curve.rows[i - 1][0]);
}

TEST_CASE("quantile binning groups a continuous covariate") {
  // continuous covariate: every value distinct
  {
    std::ofstream out("/tmp/condep_cont.csv");
    out << "y1,y2,x\n";
    Rng rng(8);
    for (int i = 0; i < 200; ++i)
      out << uniform01(rng) << "," << uniform01(rng) << "," << uniform01(rng)
          << "\n";
  }
  int rc = run_cli(
      "run --input /tmp/condep_cont.csv --covariates x --method gp --bins 8 "
      "--grid 10 --seed 1 --out /tmp/condep_c");
  REQUIRE(rc == 0);
  auto manifest = nlohmann::json::parse(slurp("/tmp/condep_c_manifest.json"));
  CHECK(manifest["data"]["levels"] == 8);
  // without binning the gp route must refuse the unreplicated levels
  int rc2 = run_cli(
      "run --input /tmp/condep_cont.csv --covariates x --method gp "
      "--grid 10 --seed 1 --out /tmp/condep_c2");
  CHECK(rc2 == 3);
}

TEST_CASE("error exit codes") {
  CHECK(run_cli("run --input /tmp/does_not_exist.csv --covariates rc "
                "--out /tmp/condep_e1") == 3);
  write_grouped_csv("/tmp/condep_grouped.csv");
  CHECK(run_cli("run --input /tmp/condep_grouped.csv --covariates rc "
                "--method warp-drive --out /tmp/condep_e2") == 2);
  CHECK(run_cli("run --input /tmp/condep_grouped.csv --covariates missing "
                "--out /tmp/condep_e3") == 3);
  CHECK(run_cli("run --input /tmp/condep_grouped.csv --covariates rc "
                "--functional sigma --out /tmp/condep_e4") == 2);
  {
    std::ofstream out("/tmp/condep_tiny.csv");
    out << "y1,y2,x\n0.5,0.5,1\n";
  }
  CHECK(run_cli("run --input /tmp/condep_tiny.csv --covariates x "
                "--out /tmp/condep_e5") == 3);
  CHECK(run_cli("bench --truth moebius --out /tmp/condep_e6") == 2);
  // clayton cannot express the negative dependence span of the sine truth
  CHECK(run_cli("bench --truth sine --family clayton --levels 4 --n 20 "
                "--reps 1 --methods gp --out /tmp/condep_e7") == 2);
}

TEST_CASE("identical config and seed give byte-identical curves") {
  write_grouped_csv("/tmp/condep_grouped.csv");
  std::string base =
      "run --input /tmp/condep_grouped.csv --covariates rc --method "
      "bayes-splines --grid 15 ";
  REQUIRE(run_cli(base + "--seed 77 --out /tmp/condep_d1") == 0);
  REQUIRE(run_cli(base + "--seed 77 --out /tmp/condep_d2") == 0);
  REQUIRE(run_cli(base + "--seed 78 --out /tmp/condep_d3") == 0);
  auto a = slurp("/tmp/condep_d1_curve.csv");
  CHECK(a == slurp("/tmp/condep_d2_curve.csv"));
  CHECK(a != slurp("/tmp/condep_d3_curve.csv"));
  CHECK(!a.empty());
}

TEST_CASE("bench subcommand emits a report") {
  int rc = run_cli(
      "bench --truth linear --family gaussian --functional rho --levels 6 "
      "--n 40 --reps 2 --methods gp,bayes-splines --seed 3 "
      "--out /tmp/condep_b");
  REQUIRE(rc == 0);
  auto report = slurp("/tmp/condep_b_report.csv");
  CHECK(report.find("gp,gaussian,") != std::string::npos);
  CHECK(report.find("bayes-splines,gaussian,") != std::string::npos);
  auto manifest = nlohmann::json::parse(slurp("/tmp/condep_b_manifest.json"));
  CHECK(manifest["truths_clipped"] == true);
  CHECK(manifest["cells"].size() == 2);
  for (const auto& cell : manifest["cells"])
    CHECK(cell["failures"] == 0);
}
