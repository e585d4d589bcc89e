#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "localsieve/experiment.hpp"
#include "localsieve/runtime.hpp"

using namespace localsieve;
namespace fs = std::filesystem;

TEST_CASE("config files parse comments, blanks, and key=value lines") {
  ExperimentConfig cfg = ExperimentConfig::fromString(
      "# header comment\n"
      "\n"
      "check = thm51\n"
      "  N =  512   # trailing comment\n"
      "b = lipbump\n"
      "rMinExp = -4\n"
      "seed = 99\n"
      "force = 1\n");
  REQUIRE(cfg.check == "thm51");
  REQUIRE(cfg.gridN == 512);
  REQUIRE(cfg.bName == "lipbump");
  REQUIRE(cfg.rMinExp == -4);
  REQUIRE(cfg.seed == 99);
  REQUIRE(cfg.force);
}

TEST_CASE("config rejections carry the offending line") {
  REQUIRE_THROWS_AS(ExperimentConfig::fromString("frobnicate = 3\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ExperimentConfig::fromString("dim = 3\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ExperimentConfig::fromString("N = twelve\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ExperimentConfig::fromString("trials = -2\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ExperimentConfig::fromString("just-some-text\n"),
                    std::invalid_argument);
  try {
    ExperimentConfig::fromString("check = pv\nbogus = 1\n");
    REQUIRE(false);
  } catch (const std::invalid_argument& e) {
    REQUIRE(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("shipped criterion configs equal the built-in definitions") {
  for (int id = 1; id <= 12; ++id) {
    char path[256];
    std::snprintf(path, sizeof(path), "%s/criterion-%02d.cfg",
                  LOCALSIEVE_CONFIG_DIR, id);
    ExperimentConfig shipped = ExperimentConfig::fromFile(path);
    REQUIRE(shipped == criterionConfig(id));
  }
}

TEST_CASE("csv round-trips preserve rows bitwise") {
  ExperimentReport rep;
  rep.columns = {"trial", "r", "ratio"};
  rep.rows = {{0.0, 0.125, 1.0 / 3.0},
              {1.0, 0.25, 22.0 / 7.0},
              {2.0, 0.5, 1e-17}};
  rep.summary = summarizeReport(rep);
  const char* path = "roundtrip_report.csv";
  rep.writeCsv(path);
  ExperimentReport back = ExperimentReport::loadCsv(path);
  REQUIRE(back.columns == rep.columns);
  REQUIRE(back.rows == rep.rows);
  REQUIRE(back.summary["rows"] == 3);
  std::remove(path);

  std::string csv = rep.csvString();
  REQUIRE(csv.rfind("trial,r,ratio\n", 0) == 0);
  REQUIRE(csv.find("0.125") != std::string::npos);
  // Decimal points, never locale commas.
  REQUIRE(csv.find("0,125") == std::string::npos);
}

TEST_CASE("report accessors address cells by column name") {
  ExperimentReport rep;
  rep.columns = {"a", "b"};
  rep.rows = {{1.0, 2.0}, {3.0, 4.0}};
  REQUIRE(rep.cell(1, "b") == 4.0);
  REQUIRE(rep.column("a") == std::vector<double>{1.0, 3.0});
  REQUIRE_THROWS_AS(rep.cell(0, "nope"), std::invalid_argument);
}

TEST_CASE("plot emission sorts by radius and groups by grid size") {
  ExperimentReport rep;
  rep.columns = {"N", "r", "ratio"};
  rep.rows = {{512.0, 0.5, 2.0},
              {512.0, 0.125, 1.0},
              {1024.0, 0.5, 3.0},
              {512.0, 0.25, 5.0}};
  rep.summary = summarizeReport(rep);
  fs::create_directories("plotout");
  emitPlotData(rep, "plotout", "demo");
  {
    std::ifstream in("plotout/demo-ratio-vs-radius.csv");
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "r,ratio");
    std::vector<double> rs;
    while (std::getline(in, line))
      rs.push_back(std::stod(line.substr(0, line.find(','))));
    REQUIRE(rs.size() == 4);
    for (std::size_t i = 1; i < rs.size(); ++i) REQUIRE(rs[i - 1] <= rs[i]);
  }
  {
    std::ifstream in("plotout/demo-ratio-vs-N.csv");
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "N,maxRatio");
    std::getline(in, line);
    REQUIRE(line.rfind("512,", 0) == 0);
    REQUIRE(line.find("5") != std::string::npos);  // max over the N=512 rows
  }
  // Headers only when the columns are absent.
  ExperimentReport empty;
  empty.columns = {"x"};
  empty.summary = summarizeReport(empty);
  emitPlotData(empty, "plotout", "none");
  std::ifstream in("plotout/none-ratio-vs-radius.csv");
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "r,ratio");
  REQUIRE_FALSE(std::getline(in, line));
  fs::remove_all("plotout");
}

TEST_CASE("spearman correlation against frozen oracles") {
  REQUIRE(spearmanCorrelation({1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}) ==
          doctest::Approx(1.0));
  REQUIRE(spearmanCorrelation({1, 2, 3, 4, 5}, {10, 8, 6, 4, 2}) ==
          doctest::Approx(-1.0));
  REQUIRE(spearmanCorrelation({1, 2, 3, 4}, {7, 7, 7, 7}) == 0.0);
  // Tie-aware oracle computed by hand: y ranks {1, 2, 3.5, 5, 3.5}.
  REQUIRE(spearmanCorrelation({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}) ==
          doctest::Approx(8.0 / std::sqrt(95.0)).epsilon(1e-12));
  REQUIRE_THROWS_AS(spearmanCorrelation({1, 2}, {1, 2, 3}),
                    std::invalid_argument);
}

TEST_CASE("registries resolve names and reject unknowns") {
  REQUIRE(kernelByName("hilbert", 1).name == "hilbert");
  REQUIRE(kernelByName("riesz2", 2).dim == 2);
  REQUIRE_THROWS_AS(kernelByName("hilbert", 2), std::invalid_argument);
  REQUIRE_THROWS_AS(kernelByName("nope", 1), std::invalid_argument);
  REQUIRE_THROWS_AS(etaByName("nope", 1), std::invalid_argument);
  REQUIRE_THROWS_AS(psiByName("nope", 1), std::invalid_argument);
  Grid g = Grid::make(1, 2.0, 32);
  REQUIRE_THROWS_AS(bFunctionByName("nope", g), std::invalid_argument);
  GridFunction c = bFunctionByName("constant", g);
  REQUIRE(c[5] == 1.0);
}

TEST_CASE("unknown checks and failing preflights are typed errors") {
  ExperimentConfig cfg;
  cfg.check = "frobnicate";
  REQUIRE_THROWS_AS(runExperiment(cfg), std::invalid_argument);

  ExperimentConfig bad;
  bad.check = "thm51";
  bad.kernel = "powlaw";  // fails its certificate
  bad.gridN = 256;
  bad.trials = 1;
  bad.rMinExp = -2;
  bad.rMaxExp = -1;
  REQUIRE_THROWS_AS(runExperiment(bad), std::runtime_error);
  bad.force = true;  // forced runs proceed with a warning
  REQUIRE_NOTHROW(runExperiment(bad));
}

TEST_CASE("zero trials produce an empty report with zero counts") {
  ExperimentConfig cfg;
  cfg.check = "thm51";
  cfg.gridN = 256;
  cfg.refineN = 0;
  cfg.trials = 0;
  cfg.rMinExp = -2;
  cfg.rMaxExp = -1;
  ExperimentReport rep = runExperiment(cfg);
  REQUIRE(rep.rows.empty());
  REQUIRE(rep.summary["rows"] == 0);
  REQUIRE_FALSE(rep.columns.empty());
}

TEST_CASE("reports are identical at different parallelism levels") {
  ExperimentConfig cfg;
  cfg.check = "decompose";
  cfg.gridN = 256;
  cfg.halfWidth = 8.0;
  cfg.trials = 5;
  cfg.rMinExp = -3;
  cfg.rMaxExp = -1;
  setWorkerThreadOverride(1);
  std::string serial = runExperiment(cfg).csvString();
  setWorkerThreadOverride(4);
  std::string wide = runExperiment(cfg).csvString();
  setWorkerThreadOverride(0);
  REQUIRE(serial == wide);
}

TEST_CASE("summaries recompute from rows on load") {
  ExperimentConfig cfg;
  cfg.check = "norms";
  cfg.gridN = 256;
  ExperimentReport rep = runExperiment(cfg);
  const char* path = "norms_report.csv";
  rep.writeCsv(path);
  ExperimentReport back = ExperimentReport::loadCsv(path);
  REQUIRE(back.rows == rep.rows);
  REQUIRE(back.summary["rows"] == rep.summary["rows"]);
  REQUIRE(back.summary["stats"] == rep.summary["stats"]);
  std::remove(path);
}

TEST_CASE("symbols load from gfn files when the grid matches") {
  Grid g = Grid::make(1, 8.0, 256);
  GridFunction b = bFunctionByName("cliplog", g);
  const char* path = "symbol_roundtrip.gfn";
  writeGfn(path, b);

  GridFunction back = bFunctionByName(path, g);
  REQUIRE(back.values == b.values);

  Grid other = Grid::make(1, 8.0, 512);
  REQUIRE_THROWS_AS(bFunctionByName(path, other), std::invalid_argument);
  std::remove(path);
}
