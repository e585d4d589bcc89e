// Command-line front end: certify kernels, compare localizations, sweep
// norms and commutator checks, decompose atoms, and reproduce the named
// acceptance runs. Exit codes: 0 pass, 1 a check failed, 2 bad usage or
// configuration.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "localsieve/experiment.hpp"
#include "localsieve/runtime.hpp"

namespace fs = std::filesystem;
using namespace localsieve;

namespace {

void addGridFlags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--dim", cfg.dim, "dimension (1 or 2)");
  cmd->add_option("-N,--grid", cfg.gridN, "cells per axis (power of two)");
  cmd->add_option("-L,--half-width", cfg.halfWidth, "box half width");
  cmd->add_option("--refine", cfg.refineN, "second grid for refinement runs");
  cmd->add_option("--seed", cfg.seed, "base RNG seed");
  cmd->add_option("--out", cfg.outDir, "directory for CSV/JSON/plot output");
  cmd->add_flag("--force", cfg.force,
                "run even when preflight certificates fail");
}

void addSweepFlags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--kernel", cfg.kernel, "kernel name (hilbert, riesz1, ...)");
  cmd->add_option("--eta", cfg.eta, "multiplicative window name");
  cmd->add_option("--psi", cfg.psi, "convolution window name");
  cmd->add_option("-b,--symbol", cfg.bName,
                  "symbol b (cliplog, lipbump, ..., or a .gfn file)");
  cmd->add_option("--trials", cfg.trials, "number of random trials");
  auto* rmin =
      cmd->add_option("--rmin", cfg.rMinExp, "smallest dyadic radius exponent");
  auto* rmax =
      cmd->add_option("--rmax", cfg.rMaxExp, "largest dyadic radius exponent");
  auto* radii = cmd->add_option_function<std::string>(
      "--radii",
      [&cfg](const std::string& v) {
        int lo = 0, hi = 0, used = -1;
        if (std::sscanf(v.c_str(), "%d..%d%n", &lo, &hi, &used) == 2 &&
            used == static_cast<int>(v.size())) {
          cfg.rMinExp = lo;
          cfg.rMaxExp = hi;
          return;
        }
        if (std::sscanf(v.c_str(), "%d%n", &lo, &used) == 1 &&
            used == static_cast<int>(v.size())) {
          cfg.rMinExp = lo;
          cfg.rMaxExp = lo;
          return;
        }
        throw CLI::ValidationError(
            "--radii", "expected dyadic exponents 'a..b' or a single 'a'");
      },
      "dyadic radius exponents a..b (radii 2^a .. 2^b)");
  radii->excludes(rmin);
  radii->excludes(rmax);
  cmd->add_option("--mu", cfg.mu, "molecule decay margin (0 = automatic)");
}

void writeReport(const std::string& dir, const std::string& name,
                 const ExperimentReport& rep) {
  fs::create_directories(dir);
  rep.writeCsv(dir + "/" + name + ".csv");
  std::ofstream js(dir + "/" + name + "-summary.json", std::ios::binary);
  js << rep.summary.dump(2) << "\n";
  emitPlotData(rep, dir, name);
}

bool reportPassed(const ExperimentReport& rep) {
  if (!rep.summary.contains("derived")) return true;
  const auto& d = rep.summary["derived"];
  return !d.contains("passed") || d["passed"].get<bool>();
}

int finishExperiment(const ExperimentConfig& cfg, const std::string& name,
                     const ExperimentReport& rep) {
  if (!cfg.outDir.empty()) writeReport(cfg.outDir, name, rep);
  std::printf("%s\n", rep.summary.dump(2).c_str());
  return reportPassed(rep) ? 0 : 1;
}

Ball parseBall(const std::string& text, int dim) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(std::stod(item));
  if (static_cast<int>(parts.size()) != dim + 1)
    throw std::invalid_argument(
        "--ball needs cx,r in dimension 1 or cx,cy,r in dimension 2");
  Ball ball;
  ball.center = dim == 1 ? Point{parts[0], 0.0} : Point{parts[0], parts[1]};
  ball.radius = parts[dim];
  return ball;
}

int runCertifyKernel(const ExperimentConfig& cfg, long budget) {
  ConvolutionKernel subject = kernelByName(cfg.kernel, cfg.dim);
  if (cfg.eta != "none")
    subject = productKernel(subject, etaByName(cfg.eta, cfg.dim));
  CertifyOptions opt;
  opt.budget = budget;
  opt.seed = cfg.seed;
  KernelCertificate cert = certifyDeltaKernel(subject, opt);
  std::printf("%s\n", cert.toJson().c_str());
  if (!cfg.outDir.empty()) {
    fs::create_directories(cfg.outDir);
    std::ofstream js(cfg.outDir + "/certificate.json", std::ios::binary);
    js << cert.toJson() << "\n";
  }
  return cert.allPassed() ? 0 : 1;
}

int runAtomDecompose(const std::string& inputPath, const std::string& bPath,
                     const std::string& ballText, const std::string& outDir) {
  GridFunction values = readGfn(inputPath);
  GridFunction b = readGfn(bPath);
  requireSameGrid(values.grid, b.grid);
  Ball ball = parseBall(ballText, values.grid.dim);

  Atom a;
  a.values = values;
  a.ball = ball;
  a.kind = AtomKind::ApproxH1b;
  a.l2Norm = lpNorm(values, 2.0);
  a.lInfNorm = lpNorm(values, std::numeric_limits<double>::infinity());
  a.integral = integrate(values);
  double cB = cBall(b, ball);
  double hN = std::pow(values.grid.spacing(), values.grid.dim);
  double pairing = 0.0;
  for (std::size_t c : cellsInBall(values.grid, ball))
    pairing += values[c] * (b[c] - cB) * hN;
  a.bPairing = pairing;

  AtomCertificate inputCert = validateAtom(a, &b);
  DecompositionResult dec = decomposeApproxAtom(a, b);

  nlohmann::ordered_json out;
  out["input"] = inputCert.toJson();
  out["alpha"] = dec.alpha;
  out["k"] = dec.k;
  out["reconstructionError"] = dec.reconstructionError;
  out["ellOneSum"] = dec.ellOneSum;
  out["ellOneBound"] = dec.ellOneBound;
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  bool allValid = true;
  for (std::size_t j = 0; j < dec.atoms.size(); ++j) {
    const Atom& comp = dec.atoms[j];
    AtomCertificate cert = validateAtom(comp, &b);
    allValid = allValid && cert.allPassed();
    nlohmann::ordered_json entry;
    entry["coefficient"] = dec.coefficients[j];
    entry["radius"] = comp.ball.radius;
    entry["kind"] = atomKindName(comp.kind);
    entry["certificate"] = cert.toJson();
    comps.push_back(entry);
  }
  out["components"] = comps;
  bool ok = inputCert.allPassed() && allValid &&
            dec.ellOneSum <= dec.ellOneBound &&
            dec.reconstructionError < 1e-12;
  out["passed"] = ok;
  std::printf("%s\n", out.dump(2).c_str());
  if (!outDir.empty()) {
    fs::create_directories(outDir);
    std::ofstream js(outDir + "/decomposition.json", std::ios::binary);
    js << out.dump(2) << "\n";
  }
  return ok ? 0 : 1;
}

int runReproduce(int id, std::string outDir) {
  CriterionResult res = runCriterion(id);
  if (outDir.empty()) outDir = "out/criterion-" + std::to_string(id);
  fs::create_directories(outDir);
  for (const auto& [name, rep] : res.reports) writeReport(outDir, name, rep);
  nlohmann::ordered_json meta;
  meta["criterion"] = res.id;
  meta["passed"] = res.passed;
  meta["detail"] = res.detail;
  std::ofstream js(outDir + "/criterion.json", std::ios::binary);
  js << meta.dump(2) << "\n";
  std::printf("criterion %02d: %s - %s\n", res.id,
              res.passed ? "PASS" : "FAIL", res.detail.c_str());
  return res.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localsieve: kernels, localizations, atoms, and commutators "
               "on sampled functions"};
  app.require_subcommand(1);

  ExperimentConfig certifyCfg;
  certifyCfg.eta = "none";
  long certifyBudget = 200000;
  CLI::App* certify =
      app.add_subcommand("certify-kernel", "certify a singular kernel");
  certify->add_option("--kernel", certifyCfg.kernel, "kernel name");
  certify->add_option("--eta", certifyCfg.eta,
                      "multiply by this window first (none to skip)");
  certify->add_option("--dim", certifyCfg.dim, "dimension (1 or 2)");
  certify->add_option("--budget", certifyBudget, "sample budget");
  certify->add_option("--seed", certifyCfg.seed, "RNG seed");
  certify->add_option("--out", certifyCfg.outDir, "output directory");

  ExperimentConfig locCfg;
  locCfg.check = "localize-compare";
  locCfg.halfWidth = 32.0;
  locCfg.gridN = 2048;
  locCfg.trials = 50;
  CLI::App* loc = app.add_subcommand(
      "localize-compare",
      "compare the window and convolution localizations of a kernel");
  addGridFlags(loc, locCfg);
  addSweepFlags(loc, locCfg);

  ExperimentConfig normsCfg;
  normsCfg.check = "norms";
  CLI::App* norms = app.add_subcommand(
      "norms", "oscillation norms of a symbol over the standard ball family");
  addGridFlags(norms, normsCfg);
  addSweepFlags(norms, normsCfg);

  std::string decInput, decSymbol, decBall, decOut;
  CLI::App* dec = app.add_subcommand(
      "atom-decompose", "decompose a sampled approximate atom");
  dec->add_option("--input", decInput, "sampled function (.gfn)")->required();
  dec->add_option("--ball", decBall, "cx,r (or cx,cy,r in dimension 2)")
      ->required();
  dec->add_option("--b", decSymbol, "symbol b (.gfn)")->required();
  dec->add_option("--out", decOut, "output directory");

  ExperimentConfig suiteCfg;
  CLI::App* suite = app.add_subcommand(
      "commutator-suite", "run one of the named commutator checks");
  suite->add_option("--check", suiteCfg.check,
                    "check id (thm51, thm54, prop47, prop48, prop412, cor414)")
      ->required();
  addGridFlags(suite, suiteCfg);
  addSweepFlags(suite, suiteCfg);

  int reproduceId = 0;
  std::string reproduceOut;
  CLI::App* repro = app.add_subcommand(
      "reproduce", "rerun a pinned acceptance criterion (1..12)");
  repro->add_option("id", reproduceId, "criterion id")->required();
  repro->add_option("--out", reproduceOut, "output directory");

  std::string runConfigPath;
  std::vector<std::string> runSets;
  ExperimentConfig runOverrides;
  CLI::App* run = app.add_subcommand("run", "run a config file");
  run->add_option("--config", runConfigPath, "key=value config file")
      ->required();
  run->add_option("--set", runSets, "extra key=value overrides");
  run->add_option("--out", runOverrides.outDir, "output directory override");
  bool runForce = false;
  run->add_flag("--force", runForce, "override preflight certificates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (certify->parsed()) return runCertifyKernel(certifyCfg, certifyBudget);
    if (loc->parsed())
      return finishExperiment(locCfg, "localize-compare", runExperiment(locCfg));
    if (norms->parsed())
      return finishExperiment(normsCfg, "norms", runExperiment(normsCfg));
    if (dec->parsed())
      return runAtomDecompose(decInput, decSymbol, decBall, decOut);
    if (suite->parsed())
      return finishExperiment(suiteCfg, suiteCfg.check,
                              runExperiment(suiteCfg));
    if (repro->parsed()) return runReproduce(reproduceId, reproduceOut);
    if (run->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::fromFile(runConfigPath);
      for (const auto& kv : runSets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--set needs key=value, got '" + kv + "'");
        cfg.applyKeyValue(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!runOverrides.outDir.empty()) cfg.outDir = runOverrides.outDir;
      if (runForce) cfg.force = true;
      if (cfg.criterion > 0) {
        CriterionResult res = runCriterionWithConfig(cfg);
        if (!cfg.outDir.empty()) {
          fs::create_directories(cfg.outDir);
          for (const auto& [name, rep] : res.reports)
            writeReport(cfg.outDir, name, rep);
        }
        std::printf("criterion %02d: %s - %s\n", res.id,
                    res.passed ? "PASS" : "FAIL", res.detail.c_str());
        return res.passed ? 0 : 1;
      }
      return finishExperiment(cfg, cfg.check, runExperiment(cfg));
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
