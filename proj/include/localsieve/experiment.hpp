#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "localsieve/atoms.hpp"
#include "localsieve/commutators.hpp"
#include "localsieve/grid.hpp"
#include "localsieve/kernels.hpp"
#include "localsieve/operators.hpp"
#include "localsieve/spaces.hpp"

#include "json.hpp"

namespace localsieve {

// Flat key=value configuration ('#' starts a comment). A config plus its
// seed fully determines a run: identical inputs give byte-identical CSV.
struct ExperimentConfig {
  std::string check;
  std::string kernel = "hilbert";
  std::string eta = "bump";
  std::string psi = "gauss";
  std::string bName = "cliplog";
  int dim = 1;
  int gridN = 1024;
  double halfWidth = 8.0;
  int refineN = 0;  // 0: no refinement comparison
  int rMinExp = -6;
  int rMaxExp = 1;
  int trials = 100;
  std::uint64_t seed = 20240801;
  double mu = 0.0;     // 0: per-check default
  bool force = false;  // run despite failing preflight certificates
  int criterion = 0;   // > 0: this config reproduces an acceptance criterion
  std::string outDir;

  static ExperimentConfig fromFile(const std::string& path);
  static ExperimentConfig fromString(const std::string& text);
  // Throws std::invalid_argument on an unknown key or a bad value.
  void applyKeyValue(const std::string& key, const std::string& value);

  bool operator==(const ExperimentConfig&) const = default;
};

// Tabular result: named columns, numeric rows in trial order, and a JSON
// summary that is always recomputable from the rows.
struct ExperimentReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::ordered_json summary;

  std::string csvString() const;  // header + "%.17g" rows, '.' decimal
  void writeCsv(const std::string& path) const;
  static ExperimentReport loadCsv(const std::string& path);

  double cell(std::size_t row, const std::string& column) const;
  std::vector<double> column(const std::string& name) const;
};

// Row count plus min/max/median per column; embedded in every summary
// under "stats" so loads can verify it.
nlohmann::ordered_json summarizeReport(const ExperimentReport& rep);

// ratio-vs-radius and ratio-vs-N series for plotting; headers-only files
// when the relevant columns are absent.
void emitPlotData(const ExperimentReport& rep, const std::string& dir,
                  const std::string& prefix);

// Rank correlation with average ranks on ties; NaN-free inputs required.
double spearmanCorrelation(const std::vector<double>& x,
                           const std::vector<double>& y);

// Built-in objects addressable from configs.
ConvolutionKernel kernelByName(const std::string& name, int dim);
Localizer etaByName(const std::string& name, int dim);
Localizer psiByName(const std::string& name, int dim);
// "cliplog", "lipbump", "randosc", "constant"; fixed internal seeding so
// the same name denotes the same function at every resolution. A name
// ending in ".gfn" is read from that file instead and must match g.
GridFunction bFunctionByName(const std::string& name, const Grid& g);

// Dispatches cfg.check: thm51, thm54, prop47, prop48, prop412, cor414,
// rescale, decompose, localize-compare, pv, tailratio, norms, certify.
// Unknown check throws std::invalid_argument.
ExperimentReport runExperiment(const ExperimentConfig& cfg);

// One acceptance criterion (1..12): runs its pinned configuration and
// evaluates the pass gates. Reports are the raw data the gates looked at.
struct CriterionResult {
  int id = 0;
  bool passed = false;
  std::string detail;
  std::vector<std::pair<std::string, ExperimentReport>> reports;
};
CriterionResult runCriterion(int id);
// Same, but driven by an explicit config whose `criterion` field selects
// the gate set (how shipped criterion configs are executed).
CriterionResult runCriterionWithConfig(const ExperimentConfig& cfg);
// The pinned configuration the criterion runs (what configs/criterion-NN.cfg
// ships).
ExperimentConfig criterionConfig(int id);

}  // namespace localsieve
