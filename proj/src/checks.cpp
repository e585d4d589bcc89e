#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "localsieve/experiment.hpp"
#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned acceptance tolerances.
constexpr double kYoungSlack = 1.05;          // localization Young bound
constexpr double kPvMaxRelErr = 0.02;         // p.v. accuracy at the fine grid
constexpr double kPvHalvingMin = 1.7;         // coarse/fine error ratio
constexpr double kRecErrTol = 1e-12;          // decomposition reconstruction
constexpr double kMeanResidualTol = 1e-8;     // small-ball component means
constexpr double kRefineFactor = 2.0;         // refinement stability band
constexpr double kSpearmanMax = 0.5;          // no upward trend vs -log r
constexpr double kControlL1Tol = 1e-10;       // constant-b commutator
constexpr double kSignIdentityTol = 1e-11;    // sign-atom identity, relative
constexpr double kCrossCheckTol = 1e-9;       // M3 vs adjoint pairing
constexpr double kMeanBoundSpreadMax = 2.0;   // mean-bound ratio across radii

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double maxOf(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, x);
  return out;
}

double medianOf(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2]
                      : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

double safeFactor(double fine, double coarse) {
  if (coarse == 0.0) return fine == 0.0 ? 1.0 : kInf;
  return fine / coarse;
}

Point snapToCell(const Grid& g, const Point& x) {
  Point out{0.0, 0.0};
  double h = g.spacing();
  for (int a = 0; a < g.dim; ++a) {
    int i = static_cast<int>(std::floor((x[a] + g.halfWidth) / h));
    i = std::clamp(i, 0, g.pointsPerAxis - 1);
    out[a] = g.coord(i);
  }
  return out;
}

Point drawCenter(Rng& rng, const Grid& g, double cap) {
  Point x{0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) x[a] = rng.uniform(-cap, cap);
  return snapToCell(g, x);
}

// Measures every certificate field of a grid function supported on a ball.
Atom atomFromValues(GridFunction f, const Ball& ball, AtomKind kind,
                    const GridFunction* b) {
  Atom a;
  a.ball = ball;
  a.kind = kind;
  a.l2Norm = lpNorm(f, 2.0);
  a.lInfNorm = lpNorm(f, kInf);
  a.integral = integrate(f);
  if (b != nullptr) {
    double cB = cBall(*b, ball);
    double hN = std::pow(f.grid.spacing(), f.grid.dim);
    double pairing = 0.0;
    for (std::size_t c : cellsInBall(f.grid, ball))
      pairing += f[c] * ((*b)[c] - cB) * hN;
    a.bPairing = pairing;
  }
  a.values = std::move(f);
  return a;
}

// A smooth oscillating shape on the unit ball, fixed by its parameters; the
// seed alone determines it, independent of any grid.
struct ContinuumProfile {
  double omega = 3.0, phase = 0.0, d0 = 1.0, d1 = 0.0;

  double operator()(const Point& u) const {
    double w = 1.0 - (u[0] * u[0] + u[1] * u[1]);
    if (w <= 0.0) return 0.0;
    return std::cos(omega * (d0 * u[0] + d1 * u[1]) + phase) * w * w;
  }

  static ContinuumProfile draw(Rng& rng, int dim) {
    ContinuumProfile p;
    p.omega = rng.logUniform(1.0, 12.0);
    p.phase = rng.uniform(0.0, 2.0 * kPi);
    if (dim == 2) {
      double angle = rng.uniform(0.0, 2.0 * kPi);
      p.d0 = std::cos(angle);
      p.d1 = std::sin(angle);
    } else {
      p.d0 = rng.symmetric() < 0.0 ? -1.0 : 1.0;
      p.d1 = 0.0;
    }
    return p;
  }
};

// h^1_b atom sampled from a continuum profile, then projected against
// {1, b} and normalized. Refinement sweeps need the trial to denote the
// same underlying function at every resolution, which per-cell noise
// cannot do; the profile construction can.
Atom continuumPerezAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                        std::uint64_t seed) {
  auto cells = cellsInBall(g, ball);
  if (cells.size() < 3)
    throw std::invalid_argument(fmt(
        "continuum atom needs >= 3 cells in the ball, found %zu", cells.size()));
  double hN = std::pow(g.spacing(), g.dim);
  double m = ballMeasure(g, ball);

  for (int attempt = 0; attempt < 8; ++attempt) {
    Rng rng(subSeed(seed, static_cast<std::uint64_t>(attempt)));
    ContinuumProfile prof = ContinuumProfile::draw(rng, g.dim);
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      Point y = g.point(cells[i]);
      Point u{(y[0] - ball.center[0]) / ball.radius,
              (y[1] - ball.center[1]) / ball.radius};
      v[i] = prof(u);
    }
    if (ball.radius < 1.0) {
      double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      for (double& x : v) x -= mean;
      // Project out b - mean_B(b); it is orthogonal to constants, so the
      // zero mean survives.
      double bMean = 0.0, bNorm = 0.0;
      for (std::size_t c : cells) bMean += b[c];
      bMean /= static_cast<double>(cells.size());
      std::vector<double> w(cells.size());
      double ww = 0.0, vw = 0.0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        w[i] = b[cells[i]] - bMean;
        ww += w[i] * w[i];
        bNorm += b[cells[i]] * b[cells[i]];
      }
      for (std::size_t i = 0; i < cells.size(); ++i) vw += v[i] * w[i];
      if (std::sqrt(ww) > 1e-12 * (1.0 + std::sqrt(bNorm)))
        for (std::size_t i = 0; i < cells.size(); ++i) v[i] -= (vw / ww) * w[i];
    }
    double n2sq = 0.0;
    for (double x : v) n2sq += x * x;
    double n2 = std::sqrt(n2sq * hN);
    if (n2 <= 1e-8 * std::sqrt(m)) continue;  // profile annihilated; redraw
    double scale = 1.0 / (std::sqrt(m) * n2);
    GridFunction f(g);
    for (std::size_t i = 0; i < cells.size(); ++i) f[cells[i]] = v[i] * scale;
    return atomFromValues(std::move(f), ball, AtomKind::PerezH1b, &b);
  }
  throw std::runtime_error("continuum atom: projection annihilated 8 draws");
}

// Approximate h^1_b atom built on a continuum core; same algebra as the
// library generator (orthogonal indicator fills the mean budget).
Atom continuumApproxAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                         std::uint64_t seed, double meanBudget) {
  Atom core = continuumPerezAtom(g, ball, b, subSeed(seed, 11));
  if (ball.radius >= 1.0) {
    core.kind = AtomKind::ApproxH1b;
    return core;
  }
  double logr = std::log1p(1.0 / ball.radius);
  double beta = std::min(1.0, meanBudget / (logr * logr));
  double gamma = std::sqrt(1.0 - beta * beta);
  double sign = Rng(subSeed(seed, 12)).symmetric() < 0.0 ? -1.0 : 1.0;
  double m = ballMeasure(g, ball);
  GridFunction f = core.values;
  f *= gamma;
  for (std::size_t c : cellsInBall(g, ball)) f[c] += sign * beta / m;
  return atomFromValues(std::move(f), ball, AtomKind::ApproxH1b, &b);
}

InhomogeneousKernel localizedKernel(const ExperimentConfig& cfg) {
  // The window vanishes beyond a fixed radius, so any positive extra decay
  // is certifiable; 1.0 is the pinned declaration.
  return InhomogeneousKernel::fromLocalizedConvolution(
      kernelByName(cfg.kernel, cfg.dim), etaByName(cfg.eta, cfg.dim), 1.0);
}

std::vector<int> gridList(const ExperimentConfig& cfg) {
  std::vector<int> ns{cfg.gridN};
  if (cfg.refineN > 0) ns.push_back(cfg.refineN);
  return ns;
}

int radiusSpan(const ExperimentConfig& cfg) {
  if (cfg.rMaxExp < cfg.rMinExp)
    throw std::invalid_argument("radius range is empty (rMaxExp < rMinExp)");
  return cfg.rMaxExp - cfg.rMinExp + 1;
}

void finishReport(ExperimentReport& rep, nlohmann::ordered_json derived) {
  rep.summary = summarizeReport(rep);
  rep.summary["derived"] = std::move(derived);
}

// ---- check drivers -------------------------------------------------------

ExperimentReport certifyExperiment(const ExperimentConfig& cfg) {
  ConvolutionKernel subject = kernelByName(cfg.kernel, cfg.dim);
  if (cfg.eta != "none")
    subject = productKernel(subject, etaByName(cfg.eta, cfg.dim));
  KernelCertificate cert = certifyDeltaKernel(subject);

  ExperimentReport rep;
  rep.columns = {"cond", "observed", "reference", "passed"};
  for (std::size_t i = 0; i < cert.order.size(); ++i) {
    const ConditionCheck& c = cert.at(cert.order[i]);
    rep.rows.push_back({static_cast<double>(i), c.observed, c.reference,
                        c.passed ? 1.0 : 0.0});
  }
  nlohmann::ordered_json derived;
  derived["subject"] = subject.name;
  derived["delta"] = subject.delta;
  derived["conditions"] = cert.order;
  derived["allPassed"] = cert.allPassed();
  derived["passed"] = cert.allPassed();
  finishReport(rep, std::move(derived));
  return rep;
}

double certifiedObserved(const ExperimentReport& rep, const std::string& name) {
  auto names = rep.summary["derived"]["conditions"]
                   .get<std::vector<std::string>>();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return rep.rows.at(i).at(1);
  throw std::invalid_argument("certificate condition '" + name + "' missing");
}

bool certifiedPassed(const ExperimentReport& rep, const std::string& name) {
  auto names = rep.summary["derived"]["conditions"]
                   .get<std::vector<std::string>>();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return rep.rows.at(i).at(3) != 0.0;
  throw std::invalid_argument("certificate condition '" + name + "' missing");
}

ExperimentReport localizeCompareExperiment(const ExperimentConfig& cfg) {
  Grid g = Grid::make(cfg.dim, cfg.halfWidth, cfg.gridN);
  ConvolutionKernel k = kernelByName(cfg.kernel, cfg.dim);
  Localizer eta = etaByName(cfg.eta, cfg.dim);
  Localizer psi = psiByName(cfg.psi, cfg.dim);
  ErrorKernelResult err = errorKernelStar(k, eta, psi, g);

  std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> rows(trials);
  double cap = cfg.halfWidth / 4.0 - g.spacing();
  parallelFor(trials, [&](std::size_t t) {
    Rng rng(subSeed(cfg.seed, 100 + t));
    GridFunction f(g);
    for (std::size_t c = 0; c < g.cellCount(); ++c) {
      Point x = g.point(c);
      if (std::abs(x[0]) <= cap && std::abs(x[1]) <= cap) f[c] = rng.symmetric();
    }
    GridFunction tEta = applyLocalized(k, eta, f);
    GridFunction tPsi = applyFourierLocalized(k, psi, f);
    double fL1 = lpNorm(f, 1.0);
    double lhs = lpNorm(tEta - tPsi, 1.0);
    double rhs = err.l1Norm * fL1;
    rows[t] = {static_cast<double>(t), fL1, lhs, rhs,
               rhs > 0.0 ? lhs / rhs : 0.0};
  });

  ExperimentReport rep;
  rep.columns = {"trial", "fL1", "lhs", "rhs", "ratio"};
  rep.rows = std::move(rows);

  nlohmann::ordered_json derived;
  derived["kStarL1"] = err.l1Norm;
  derived["tailDecays"] = err.tailDecays();
  nlohmann::ordered_json shells = nlohmann::ordered_json::array();
  for (const auto& [radius, mass] : err.shellProfile)
    shells.push_back({radius, mass});
  derived["shellProfile"] = shells;
  double maxRatio = rep.rows.empty() ? 0.0 : maxOf(rep.column("ratio"));
  derived["maxRatio"] = maxRatio;
  derived["passed"] = err.tailDecays() && maxRatio <= kYoungSlack;
  finishReport(rep, std::move(derived));
  return rep;
}

double pvRelativeError(const Grid& g, const GridFunction& tf, double excl) {
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < g.cellCount(); ++c) {
    double x = g.point(c)[0];
    if (std::abs(x - 1.0) <= excl || std::abs(x + 1.0) <= excl) continue;
    double oracle = (std::log(std::abs(x + 1.0)) - std::log(std::abs(x - 1.0))) / kPi;
    num += (tf[c] - oracle) * (tf[c] - oracle);
    den += oracle * oracle;
  }
  return std::sqrt(num / den);
}

ExperimentReport pvAccuracyExperiment(const ExperimentConfig& cfg) {
  if (cfg.dim != 1)
    throw std::invalid_argument("the pv check is one-dimensional");
  ConvolutionKernel k = kernelByName(cfg.kernel, cfg.dim);
  double hCoarse = 2.0 * cfg.halfWidth / cfg.gridN;

  ExperimentReport rep;
  rep.columns = {"N", "errOwn", "errCommon"};
  for (int n : gridList(cfg)) {
    Grid g = Grid::make(1, cfg.halfWidth, n);
    GridFunction f = GridFunction::sample(
        g, [](const Point& x) { return std::abs(x[0]) <= 1.0 ? 1.0 : 0.0; });
    GridFunction tf = applyPV(k, f);
    // Own exclusion follows the grid; the common exclusion is fixed by the
    // coarse grid so the refinement comparison measures one region.
    double own = pvRelativeError(g, tf, 4.0 * g.spacing());
    double common = pvRelativeError(g, tf, 4.0 * hCoarse);
    rep.rows.push_back({static_cast<double>(n), own, common});
  }

  nlohmann::ordered_json derived;
  double errFineOwn = rep.rows.back().at(1);
  derived["errFineOwn"] = errFineOwn;
  bool passed = errFineOwn <= kPvMaxRelErr;
  if (rep.rows.size() == 2) {
    double halving = safeFactor(rep.rows.front().at(2), rep.rows.back().at(2));
    derived["halvingRatio"] = halving;
    passed = passed && halving >= kPvHalvingMin;
  }
  derived["passed"] = passed;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport decomposeExperiment(const ExperimentConfig& cfg) {
  if (cfg.rMaxExp >= 0)
    throw std::invalid_argument("the decompose check needs radii < 1");
  Grid g = Grid::make(cfg.dim, cfg.halfWidth, cfg.gridN);
  GridFunction b = bFunctionByName(cfg.bName, g);
  double cb = bmoNormValue(b, BallFamily::standard(g), 2);
  int span = radiusSpan(cfg);
  double cap = cfg.halfWidth - 1.25;

  std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> rows(trials);
  parallelFor(trials, [&](std::size_t t) {
    Rng rng(subSeed(cfg.seed, 500 + t));
    double r = std::ldexp(1.0, cfg.rMinExp + static_cast<int>(t % span));
    Point x0 = drawCenter(rng, g, cap);
    double budget = rng.uniform(0.2, 1.0);
    Ball ball{x0, r};
    Atom a = makeApproxH1bAtom(g, ball, b, subSeed(cfg.seed, 900 + t), budget);
    DecompositionResult dec = decomposeApproxAtom(a, b);

    double meanMax = 0.0, pairMax = 0.0;
    bool valid = true;
    for (const Atom& comp : dec.atoms) {
      if (comp.ball.radius < 1.0)
        meanMax = std::max(meanMax, std::abs(comp.integral));
      pairMax = std::max(pairMax, std::abs(comp.bPairing.value_or(0.0)));
      valid = valid && validateAtom(comp, &b, cb).allPassed();
    }
    rows[t] = {static_cast<double>(t),
               r,
               dec.alpha,
               static_cast<double>(dec.k),
               static_cast<double>(dec.atoms.size()),
               dec.reconstructionError,
               dec.ellOneSum,
               dec.ellOneBound,
               meanMax,
               pairMax,
               valid ? 1.0 : 0.0};
  });

  ExperimentReport rep;
  rep.columns = {"trial", "r",       "alpha",  "k",       "nAtoms", "recErr",
                 "ellOne", "ellBound", "meanMax", "pairMax", "valid"};
  rep.rows = std::move(rows);

  nlohmann::ordered_json derived;
  bool boundOk = true, allValid = true;
  double maxRec = 0.0, maxMean = 0.0;
  for (const auto& row : rep.rows) {
    maxRec = std::max(maxRec, row[5]);
    boundOk = boundOk && row[6] <= row[7];
    maxMean = std::max(maxMean, row[8]);
    allValid = allValid && row[10] == 1.0;
  }
  derived["maxReconstructionError"] = maxRec;
  derived["maxMeanResidual"] = maxMean;
  derived["allComponentsValid"] = allValid;
  derived["ellOneBoundHolds"] = boundOk;
  derived["passed"] = allValid && boundOk && maxRec < kRecErrTol &&
                      maxMean < kMeanResidualTol;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport commutatorL1Experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.columns = {"trial", "N",     "r",           "meanBudget",
                 "l1",    "ratio", "compMaxRatio", "nComp"};
  int span = radiusSpan(cfg);
  nlohmann::ordered_json perN = nlohmann::ordered_json::array();

  for (int n : gridList(cfg)) {
    Grid g = Grid::make(cfg.dim, cfg.halfWidth, n);
    GridFunction b = bFunctionByName(cfg.bName, g);
    double bmo = bmoNormValue(b, BallFamily::standard(g), 1);
    InhomogeneousKernel K = localizedKernel(cfg);

    std::size_t trials = static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<double>> rows(trials);
    parallelFor(trials, [&](std::size_t t) {
      Rng rng(subSeed(cfg.seed, 2000 + t));
      double r = std::ldexp(1.0, cfg.rMinExp + static_cast<int>(t % span));
      double cap = cfg.halfWidth - std::max(1.0, r) - 0.25;
      Point x0 = drawCenter(rng, g, cap);
      double budget = rng.uniform(0.2, 1.0);
      Ball ball{x0, r};
      Atom a = continuumApproxAtom(g, ball, b, subSeed(cfg.seed, 3000 + t),
                                   budget);
      double l1 = 0.0, compMax = 0.0, nComp = 1.0;
      if (r < 1.0) {
        DecompositionResult dec = decomposeApproxAtom(a, b);
        GridFunction total(g);
        for (std::size_t j = 0; j < dec.atoms.size(); ++j) {
          CommutatorParts parts = commutatorApply(b, K, dec.atoms[j]);
          compMax = std::max(compMax, lpNorm(parts.total, 1.0));
          total += parts.total * dec.coefficients[j];
        }
        l1 = lpNorm(total, 1.0);
        nComp = static_cast<double>(dec.atoms.size());
      } else {
        CommutatorParts parts = commutatorApply(b, K, a);
        l1 = lpNorm(parts.total, 1.0);
        compMax = l1;
      }
      double ratio = bmo > 0.0 ? l1 / bmo : l1;
      double compRatio = bmo > 0.0 ? compMax / bmo : compMax;
      rows[t] = {static_cast<double>(t), static_cast<double>(n), r, budget,
                 l1, ratio, compRatio, nComp};
    });

    std::vector<double> ratios, logInvR, l1s;
    for (const auto& row : rows) {
      ratios.push_back(row[5]);
      logInvR.push_back(-std::log(row[2]));
      l1s.push_back(row[4]);
      rep.rows.push_back(row);
    }
    nlohmann::ordered_json entry;
    entry["N"] = n;
    entry["bmoNorm"] = bmo;
    entry["maxRatio"] = maxOf(ratios);
    entry["medianRatio"] = medianOf(ratios);
    entry["maxL1"] = maxOf(l1s);
    entry["spearman"] =
        ratios.size() >= 2 ? spearmanCorrelation(ratios, logInvR) : 0.0;
    perN.push_back(entry);
  }

  nlohmann::ordered_json derived;
  derived["perN"] = perN;
  if (perN.size() == 2)
    derived["refinementFactor"] = safeFactor(
        perN[1]["maxRatio"].get<double>(), perN[0]["maxRatio"].get<double>());
  derived["passed"] = true;  // data run; gates live with the criteria
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport moleculeExperiment(const ExperimentConfig& cfg) {
  if (cfg.rMaxExp >= 0)
    throw std::invalid_argument("the molecule check needs radii < 1");
  ExperimentReport rep;
  rep.columns = {"trial",    "N",     "r",      "m1Ratio",  "m2Ratio",
                 "m3Ratio",  "multiple", "trendOk", "m3Obs",    "pairDiff",
                 "csRatio"};
  int span = radiusSpan(cfg);
  nlohmann::ordered_json perN = nlohmann::ordered_json::array();

  for (int n : gridList(cfg)) {
    Grid g = Grid::make(cfg.dim, cfg.halfWidth, n);
    GridFunction b = bFunctionByName(cfg.bName, g);
    InhomogeneousKernel K = localizedKernel(cfg);
    double mu = cfg.mu > 0.0 ? cfg.mu
                             : 0.75 * std::min(K.delta, K.extraDecay);

    std::size_t trials = static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<double>> rows(trials);
    parallelFor(trials, [&](std::size_t t) {
      Rng rng(subSeed(cfg.seed, 4000 + t));
      double r = std::ldexp(1.0, cfg.rMinExp + static_cast<int>(t % span));
      double cap = cfg.halfWidth - 2.0 * r - 0.25;
      Point x0 = drawCenter(rng, g, cap);
      Ball ball{x0, r};
      Atom a = continuumPerezAtom(g, ball, b, subSeed(cfg.seed, 4500 + t));

      MoleculeCertificate mc = commutatorMoleculeCheck(b, K, a, mu);
      double m1r = mc.m1.observed / mc.m1.bound;
      double m2r = mc.m2.observed / mc.m2.bound;
      double m3r = mc.m3.observed / mc.m3.bound;
      double multiple = std::max({m1r, m2r, m3r});

      TStarPairing tp = tStarPairing(K, b, ball, a.values);
      double pairDiff = std::abs(std::abs(tp.value) - mc.m3.observed);
      TStarBCondition tsb = tStarBCondition(K, b, ball);
      double cs = tsb.oscillation * std::sqrt(ballMeasure(g, ball)) * a.l2Norm;
      double csRatio = cs > 0.0 ? mc.m3.observed / cs
                                : (mc.m3.observed > 0.0 ? kInf : 0.0);
      rows[t] = {static_cast<double>(t),
                 static_cast<double>(n),
                 r,
                 m1r,
                 m2r,
                 m3r,
                 multiple,
                 (mc.trendOk && tp.trendOk) ? 1.0 : 0.0,
                 mc.m3.observed,
                 pairDiff,
                 csRatio};
    });

    std::vector<double> multiples;
    for (const auto& row : rows) {
      multiples.push_back(row[6]);
      rep.rows.push_back(row);
    }
    nlohmann::ordered_json entry;
    entry["N"] = n;
    entry["mu"] = mu;
    entry["maxMultiple"] = maxOf(multiples);
    entry["medianMultiple"] = medianOf(multiples);
    perN.push_back(entry);
  }

  nlohmann::ordered_json derived;
  derived["perN"] = perN;
  if (perN.size() == 2)
    derived["refinementFactor"] =
        safeFactor(perN[1]["maxMultiple"].get<double>(),
                   perN[0]["maxMultiple"].get<double>());
  bool gatesOk = true;
  for (const auto& row : rep.rows) {
    gatesOk = gatesOk && row[7] == 1.0 &&
              row[9] <= kCrossCheckTol * (1.0 + row[8]) &&
              row[10] <= 1.0 + 1e-6;
  }
  derived["crossChecksOk"] = gatesOk;
  derived["passed"] = gatesOk;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport maximalAtomExperiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.columns = {"trial", "N",      "r",     "mbL1",
                 "ratio", "dictL1", "h1est", "outside2B"};
  int span = radiusSpan(cfg);
  nlohmann::ordered_json perN = nlohmann::ordered_json::array();

  for (int n : gridList(cfg)) {
    Grid g = Grid::make(cfg.dim, cfg.halfWidth, n);
    GridFunction b = bFunctionByName(cfg.bName, g);
    BallFamily fam = BallFamily::standard(g);
    BallCommutatorContext ctx = makeBallCommutatorContext(b, fam);
    double bmo = bmoNormValue(b, fam, 1);
    TestDictionary dict = TestDictionary::standard(g);

    std::size_t trials = static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<double>> rows(trials);
    parallelFor(trials, [&](std::size_t t) {
      Rng rng(subSeed(cfg.seed, 5000 + t));
      double r = std::ldexp(1.0, cfg.rMinExp + static_cast<int>(t % span));
      double cap = cfg.halfWidth - std::max(1.0, r) - 0.25;
      Point x0 = drawCenter(rng, g, cap);
      Ball ball{x0, r};
      Atom a = continuumPerezAtom(g, ball, b, subSeed(cfg.seed, 5500 + t));

      GridFunction mb = ballCommutatorMaximal(ctx, a.values);
      double mbL1 = lpNorm(mb, 1.0);
      GridFunction dictF = commutatorMaximalLower(b, a.values, dict);
      double dictL1 = subgridL1(dictF, dict.stride);

      GridFunction prod(g);
      double cB = cBall(b, ball);
      for (std::size_t c : cellsInBall(g, ball))
        prod[c] = a.values[c] * (b[c] - cB);
      double h1est = h1NormEstimateDefault(prod);

      double outside = 0.0;
      for (std::size_t c = 0; c < g.cellCount(); ++c) {
        if (dictF[c] == 0.0) continue;
        Point x = g.point(c);
        Point d{x[0] - ball.center[0], x[1] - ball.center[1]};
        if (norm2(d) > 2.0 * r) outside = std::max(outside, std::abs(dictF[c]));
      }
      rows[t] = {static_cast<double>(t), static_cast<double>(n), r, mbL1,
                 bmo > 0.0 ? mbL1 / bmo : mbL1, dictL1, h1est, outside};
    });

    std::vector<double> ratios, low, high;
    double outsideMax = 0.0;
    for (const auto& row : rows) {
      ratios.push_back(row[4]);
      if (row[6] > 0.0) {
        low.push_back(row[5] / row[6]);
        high.push_back((row[5] + bmo) / row[6]);
      }
      if (row[2] >= 1.0) outsideMax = std::max(outsideMax, row[7]);
      rep.rows.push_back(row);
    }
    nlohmann::ordered_json entry;
    entry["N"] = n;
    entry["bmoNorm"] = bmo;
    entry["maxRatio"] = maxOf(ratios);
    entry["medianRatio"] = medianOf(ratios);
    entry["sandwichLow"] =
        low.empty() ? 0.0 : *std::min_element(low.begin(), low.end());
    entry["sandwichHigh"] = maxOf(high);
    entry["outside2BMax"] = outsideMax;
    perN.push_back(entry);
  }

  nlohmann::ordered_json derived;
  derived["perN"] = perN;
  if (perN.size() == 2)
    derived["refinementFactor"] = safeFactor(
        perN[1]["maxRatio"].get<double>(), perN[0]["maxRatio"].get<double>());
  derived["passed"] = true;  // data run; gates live with the criteria
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport signAtomExperiment(const ExperimentConfig& cfg) {
  Grid g = Grid::make(cfg.dim, cfg.halfWidth, cfg.gridN);
  GridFunction b = bFunctionByName(cfg.bName, g);
  auto sweep = signAtomIdentitySweep(b, BallFamily::standard(g));

  ExperimentReport rep;
  rep.columns = {"idx", "cx", "cy", "r", "logw", "meanOsc", "pairing", "wdiff"};
  double maxNormalized = 0.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const SignAtomRow& row = sweep[i];
    double logw = std::log1p(1.0 / row.radius);
    rep.rows.push_back({static_cast<double>(i), row.center[0], row.center[1],
                        row.radius, logw, row.meanOscillation, row.pairing,
                        logw * row.difference});
    maxNormalized = std::max(
        maxNormalized, row.difference / (1.0 + row.meanOscillation));
  }
  nlohmann::ordered_json derived;
  derived["balls"] = sweep.size();
  derived["maxNormalizedDiff"] = maxNormalized;
  derived["passed"] = maxNormalized <= kSignIdentityTol;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport aBConstantExperiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.columns = {"idx", "N", "cx", "cy", "r", "h1est", "measure", "ratio"};
  nlohmann::ordered_json perN = nlohmann::ordered_json::array();

  for (int n : gridList(cfg)) {
    Grid g = Grid::make(cfg.dim, cfg.halfWidth, n);
    GridFunction b = bFunctionByName(cfg.bName, g);
    double off = cfg.halfWidth / 4.0;
    std::vector<Point> centers{{0.0, 0.0}, {-off, 0.0}, {off, 0.0}};
    if (cfg.dim == 2) {
      centers.push_back({0.0, -off});
      centers.push_back({0.0, off});
    }
    std::vector<double> radii;
    for (int e = cfg.rMinExp; e <= cfg.rMaxExp; ++e)
      radii.push_back(std::ldexp(1.0, e));
    BallFamily fam = BallFamily::fromLists(centers, radii);
    ABConstantReport ab = aBConstantSweep(b, fam);
    for (std::size_t i = 0; i < ab.rows.size(); ++i) {
      const ABConstantRow& row = ab.rows[i];
      rep.rows.push_back({static_cast<double>(i), static_cast<double>(n),
                          row.center[0], row.center[1], row.radius,
                          row.h1Estimate, row.measure, row.ratio});
    }
    perN.push_back({{"N", n}, {"sup", ab.sup}});
  }

  nlohmann::ordered_json derived;
  derived["perN"] = perN;
  if (perN.size() == 2)
    derived["refinementFactor"] = safeFactor(perN[1]["sup"].get<double>(),
                                             perN[0]["sup"].get<double>());
  derived["passed"] = true;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport rescaleExperiment(const ExperimentConfig& cfg) {
  Grid g = Grid::make(cfg.dim, cfg.halfWidth, cfg.gridN);
  GridFunction b = bFunctionByName(cfg.bName, g);
  BallFamily fam = BallFamily::standard(g);
  OscillationReport osc = lmoNorms(b, fam);
  double gamma = std::log(2.0) * osc.bmolocP.at(2) / osc.lmolocP.at(2);
  double cb = bmoNormValue(b, fam, 2);

  std::vector<Ball> smalls;
  for (const Ball& ball : fam.balls(g))
    if (ball.radius < 1.0) smalls.push_back(ball);
  if (smalls.empty())
    throw std::runtime_error("the ball family has no small balls");

  std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> rows(trials);
  parallelFor(trials, [&](std::size_t t) {
    Ball ball = smalls[t % smalls.size()];
    Atom atom = makeH1Atom(g, ball, subSeed(cfg.seed, 6000 + t), true);
    GridFunction scaled = atom.values;
    scaled *= gamma;
    Atom sa = atomFromValues(std::move(scaled), ball, AtomKind::ApproxH1b, &b);
    AtomCertificate cert = validateAtom(sa, &b, cb);
    auto ratio = [&](const char* name) {
      const AtomCondition& c = cert.at(name);
      return c.bound > 0.0 ? c.observed / c.bound : 0.0;
    };
    rows[t] = {static_cast<double>(t), ball.radius,          gamma,
               ratio("size_l2"),       ratio("mean"),        ratio("b_pairing"),
               cert.allPassed() ? 1.0 : 0.0};
  });

  ExperimentReport rep;
  rep.columns = {"trial",     "r",         "gamma",      "sizeRatio",
                 "meanRatio", "pairRatio", "passedRow"};
  rep.rows = std::move(rows);

  nlohmann::ordered_json derived;
  derived["gamma"] = gamma;
  bool all = true;
  for (const auto& row : rep.rows) all = all && row[6] == 1.0;
  derived["allPassed"] = all;
  derived["passed"] = all;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport tailRatioExperiment(const ExperimentConfig& cfg) {
  if (cfg.rMaxExp >= 0)
    throw std::invalid_argument("the tailratio check needs radii < 1");
  ExperimentReport rep;
  rep.columns = {"N", "kind", "bIdx", "centerIdx", "r", "p", "value", "trendOk"};
  const std::vector<std::string> bNames{"cliplog", "lipbump", "randosc"};
  nlohmann::ordered_json perN = nlohmann::ordered_json::array();

  for (int n : gridList(cfg)) {
    Grid g = Grid::make(cfg.dim, cfg.halfWidth, n);
    BallFamily fam = BallFamily::standard(g);
    std::vector<GridFunction> bs;
    for (const auto& name : bNames) bs.push_back(bFunctionByName(name, g));
    std::vector<Point> centers{{0.0, 0.0},
                               {cfg.halfWidth / 4.0,
                                cfg.dim == 2 ? cfg.halfWidth / 4.0 : 0.0}};

    double maxTail = 0.0;
    bool trendAll = true;
    for (std::size_t bi = 0; bi < bs.size(); ++bi) {
      for (std::size_t ci = 0; ci < centers.size(); ++ci) {
        for (int e = cfg.rMinExp; e <= cfg.rMaxExp; ++e) {
          Ball ball{centers[ci], std::ldexp(1.0, e)};
          for (double p : {1.0, 2.0}) {
            TailRatioReport tr = weightedTailRatio(bs[bi], ball, 1.0, p, &fam);
            maxTail = std::max(maxTail, tr.ratio);
            trendAll = trendAll && tr.trendOk;
            rep.rows.push_back({static_cast<double>(n), 0.0,
                                static_cast<double>(bi),
                                static_cast<double>(ci), ball.radius, p,
                                tr.ratio, tr.trendOk ? 1.0 : 0.0});
          }
        }
      }
    }

    double meanSpreadMax = 0.0;
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      double lo = kInf, hi = 0.0;
      for (int e = cfg.rMinExp; e <= cfg.rMaxExp; ++e) {
        Ball ball{centers[ci], std::ldexp(1.0, e)};
        Rng rng(subSeed(cfg.seed, 7000 + 16 * (e - cfg.rMinExp) + ci));
        ContinuumProfile prof = ContinuumProfile::draw(rng, g.dim);
        GridFunction gf(g);
        for (std::size_t c : cellsInBall(g, ball)) {
          Point y = g.point(c);
          Point u{(y[0] - ball.center[0]) / ball.radius,
                  (y[1] - ball.center[1]) / ball.radius};
          gf[c] = 1.0 + 0.5 * prof(u);
        }
        double v = meanBoundRatio(gf, ball);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        rep.rows.push_back({static_cast<double>(n), 1.0, -1.0,
                            static_cast<double>(ci), ball.radius, 0.0, v, 1.0});
      }
      meanSpreadMax = std::max(meanSpreadMax, lo > 0.0 ? hi / lo : kInf);
    }

    perN.push_back({{"N", n},
                    {"maxTailRatio", maxTail},
                    {"tailTrendsOk", trendAll},
                    {"meanBoundSpread", meanSpreadMax}});
  }

  nlohmann::ordered_json derived;
  derived["perN"] = perN;
  if (perN.size() == 2)
    derived["refinementFactor"] =
        safeFactor(perN[1]["maxTailRatio"].get<double>(),
                   perN[0]["maxTailRatio"].get<double>());
  bool trendOk = true;
  for (const auto& e : perN) trendOk = trendOk && e["tailTrendsOk"].get<bool>();
  derived["passed"] = trendOk;
  finishReport(rep, std::move(derived));
  return rep;
}

ExperimentReport normsExperiment(const ExperimentConfig& cfg) {
  Grid g = Grid::make(cfg.dim, cfg.halfWidth, cfg.gridN);
  GridFunction b = bFunctionByName(cfg.bName, g);
  BallFamily fam = BallFamily::standard(g);
  OscillationReport osc = oscillationReport(b, fam);

  ExperimentReport rep;
  rep.columns = {"p", "bmoRef", "bmoSmall", "lmoSmall"};
  for (int p : {1, 2})
    rep.rows.push_back({static_cast<double>(p), osc.bmoP.at(p),
                        osc.bmolocP.at(p), osc.lmolocP.at(p)});

  nlohmann::ordered_json derived;
  derived["bmo6"] = osc.bmoP.at(6);
  derived["smallBallSup"] = osc.smallBallSup;
  derived["largeBallSup"] = osc.largeBallSup;
  derived["smallBallCount"] = osc.smallBallCount;
  derived["largeBallCount"] = osc.largeBallCount;
  derived["lmo"] = osc.lmo();
  derived["passed"] = true;
  finishReport(rep, std::move(derived));
  return rep;
}

// ---- preflight ------------------------------------------------------------

void preflightCertificates(const ExperimentConfig& cfg) {
  bool usesKernel = cfg.check == "thm51" || cfg.check == "thm54" ||
                    cfg.check == "prop47" || cfg.check == "prop48" ||
                    cfg.check == "localize-compare" || cfg.check == "pv";
  bool usesEta = cfg.check == "thm51" || cfg.check == "thm54" ||
                 cfg.check == "prop47" || cfg.check == "prop48" ||
                 cfg.check == "localize-compare";
  bool usesPsi = cfg.check == "localize-compare";
  if (!usesKernel && !usesEta && !usesPsi) return;

  CertifyOptions opt;
  opt.budget = 20000;
  std::string failed;
  if (usesKernel &&
      !certifyDeltaKernel(kernelByName(cfg.kernel, cfg.dim), opt).allPassed())
    failed += " kernel:" + cfg.kernel;
  if (usesEta &&
      !certifyLocalizerEta(etaByName(cfg.eta, cfg.dim), opt).allPassed())
    failed += " eta:" + cfg.eta;
  if (usesPsi &&
      !certifyLocalizerPsi(psiByName(cfg.psi, cfg.dim), opt).allPassed())
    failed += " psi:" + cfg.psi;
  if (failed.empty()) return;
  if (cfg.force) {
    std::fprintf(stderr,
                 "warning: preflight certificates failed for%s; forced run\n",
                 failed.c_str());
    return;
  }
  throw std::runtime_error("preflight certificate failure for" + failed +
                           " (set force=1 to run anyway)");
}

}  // namespace

// ---- dispatch ---------------------------------------------------------------

ExperimentReport runExperiment(const ExperimentConfig& cfg) {
  preflightCertificates(cfg);
  if (cfg.check == "certify") return certifyExperiment(cfg);
  if (cfg.check == "localize-compare") return localizeCompareExperiment(cfg);
  if (cfg.check == "pv") return pvAccuracyExperiment(cfg);
  if (cfg.check == "decompose") return decomposeExperiment(cfg);
  if (cfg.check == "thm51") return commutatorL1Experiment(cfg);
  if (cfg.check == "thm54") return moleculeExperiment(cfg);
  if (cfg.check == "prop47" || cfg.check == "prop48")
    return maximalAtomExperiment(cfg);
  if (cfg.check == "prop412") return signAtomExperiment(cfg);
  if (cfg.check == "cor414") return aBConstantExperiment(cfg);
  if (cfg.check == "rescale") return rescaleExperiment(cfg);
  if (cfg.check == "tailratio") return tailRatioExperiment(cfg);
  if (cfg.check == "norms") return normsExperiment(cfg);
  throw std::invalid_argument("unknown check id '" + cfg.check + "'");
}

// ---- acceptance criteria ----------------------------------------------------

ExperimentConfig criterionConfig(int id) {
  ExperimentConfig c;
  c.criterion = id;
  switch (id) {
    case 1:
      c.check = "certify";
      c.kernel = "hilbert";
      c.eta = "none";
      break;
    case 2:
      c.check = "certify";
      c.kernel = "hilbert";
      c.eta = "bump";
      break;
    case 3:
      c.check = "localize-compare";
      c.halfWidth = 32.0;
      c.gridN = 2048;
      c.trials = 50;
      break;
    case 4:
      c.check = "pv";
      c.gridN = 2048;
      c.refineN = 4096;
      break;
    case 5:
      c.check = "decompose";
      c.gridN = 1024;
      c.trials = 100;
      c.rMinExp = -6;
      c.rMaxExp = -1;
      break;
    case 6:
      c.check = "thm51";
      c.gridN = 1024;
      c.refineN = 2048;
      c.trials = 100;
      c.rMinExp = -6;
      c.rMaxExp = 1;
      break;
    case 7:
      c.check = "thm54";
      c.bName = "lipbump";
      c.gridN = 512;
      c.refineN = 1024;
      c.trials = 24;
      c.rMinExp = -5;
      c.rMaxExp = -1;
      break;
    case 8:
      c.check = "prop47";
      c.gridN = 1024;
      c.refineN = 2048;
      c.trials = 100;
      c.rMinExp = -5;
      c.rMaxExp = 1;
      break;
    case 9:
      c.check = "rescale";
      c.bName = "lipbump";
      c.gridN = 1024;
      c.trials = 100;
      break;
    case 10:
      c.check = "prop412";
      c.gridN = 1024;
      break;
    case 11:
      c.check = "tailratio";
      c.gridN = 1024;
      c.refineN = 2048;
      c.rMinExp = -5;
      c.rMaxExp = -1;
      break;
    case 12:
      c.check = "determinism";
      break;
    default:
      throw std::invalid_argument("criterion id must be 1..12");
  }
  return c;
}

namespace {

bool inBand(double factor) {
  return factor >= 1.0 / kRefineFactor && factor <= kRefineFactor;
}

CriterionResult criterion1(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 1;
  auto certify = [&](const std::string& kernel, int dim) {
    ExperimentConfig c = cfg;
    c.check = "certify";
    c.criterion = 0;
    c.kernel = kernel;
    c.dim = dim;
    c.eta = "none";
    return runExperiment(c);
  };
  ExperimentReport hil = certify("hilbert", 1);
  ExperimentReport rz = certify("riesz1", 2);
  ExperimentReport pw = certify("powlaw", 1);

  double hilCancel = certifiedObserved(hil, "cancellation");
  double rzCancel = certifiedObserved(rz, "cancellation");
  bool oddOk = hil.summary["derived"]["allPassed"].get<bool>() &&
               rz.summary["derived"]["allPassed"].get<bool>() &&
               hilCancel < 1e-12 && rzCancel < 1e-12;
  bool pwFails = !pw.summary["derived"]["allPassed"].get<bool>() &&
                 !certifiedPassed(pw, "cancellation");

  // |x|^{-n} has equal mass in every dyadic shell, so the cumulative shell
  // integral grows linearly in the shell count.
  ConvolutionKernel powlaw = kernelByName("powlaw", 1);
  ExperimentReport shells;
  shells.columns = {"shell", "increment", "partial"};
  double minInc = kInf, maxInc = 0.0, partial = 0.0;
  for (int j = 0; j < 8; ++j) {
    double inc = shellIntegral(powlaw.evaluator, 1, std::ldexp(1.0, j),
                               std::ldexp(1.0, j + 1));
    partial += inc;
    minInc = std::min(minInc, inc);
    maxInc = std::max(maxInc, inc);
    shells.rows.push_back({static_cast<double>(j), inc, partial});
  }
  shells.summary = summarizeReport(shells);
  bool linear = maxInc > 0.1 && minInc >= 0.5 * maxInc;

  res.passed = oddOk && pwFails && linear;
  res.detail = fmt(
      "hilbert cancel %.2e, riesz(1,2) cancel %.2e; powlaw cancellation "
      "fails with flat shell increments (min/max %.3f)",
      hilCancel, rzCancel, maxInc > 0.0 ? minInc / maxInc : 0.0);
  res.reports = {{"certify-hilbert", std::move(hil)},
                 {"certify-riesz12", std::move(rz)},
                 {"certify-powlaw", std::move(pw)},
                 {"powlaw-shells", std::move(shells)}};
  return res;
}

CriterionResult criterion2(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 2;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  bool all = rep.summary["derived"]["allPassed"].get<bool>();
  double delta = rep.summary["derived"]["delta"].get<double>();
  res.passed = all && delta == 1.0;
  res.detail = fmt("localized product kernel certificate %s at delta=%g",
                   all ? "passes" : "FAILS", delta);
  res.reports = {{"certify-product", std::move(rep)}};
  return res;
}

CriterionResult criterion3(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 3;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  bool tail = rep.summary["derived"]["tailDecays"].get<bool>();
  double maxRatio = rep.summary["derived"]["maxRatio"].get<double>();
  double kl1 = rep.summary["derived"]["kStarL1"].get<double>();
  res.passed = tail && maxRatio <= kYoungSlack;
  res.detail = fmt(
      "error-kernel L1 %.4f, shell tail decays: %s, max Young ratio %.4f "
      "(cap %.2f)",
      kl1, tail ? "yes" : "NO", maxRatio, kYoungSlack);
  res.reports = {{"localize-compare", std::move(rep)}};
  return res;
}

CriterionResult criterion4(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 4;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double errFine = rep.summary["derived"]["errFineOwn"].get<double>();
  double halving = rep.summary["derived"]["halvingRatio"].get<double>();
  res.passed = errFine <= kPvMaxRelErr && halving >= kPvHalvingMin;
  res.detail = fmt(
      "relative L2 error %.4f at N=%d (cap %.2f), coarse/fine error ratio "
      "%.2f (need >= %.2f)",
      errFine, cfg.refineN, kPvMaxRelErr, halving, kPvHalvingMin);
  res.reports = {{"pv-accuracy", std::move(rep)}};
  return res;
}

CriterionResult criterion5(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 5;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  const auto& d = rep.summary["derived"];
  double maxRec = d["maxReconstructionError"].get<double>();
  double maxMean = d["maxMeanResidual"].get<double>();
  bool valid = d["allComponentsValid"].get<bool>();
  bool bound = d["ellOneBoundHolds"].get<bool>();
  res.passed = d["passed"].get<bool>();
  res.detail = fmt(
      "reconstruction error %.2e (cap %.0e), small-ball mean residual %.2e "
      "(cap %.0e), components valid: %s, ell-1 bound holds: %s",
      maxRec, kRecErrTol, maxMean, kMeanResidualTol, valid ? "yes" : "NO",
      bound ? "yes" : "NO");
  res.reports = {{"decompose", std::move(rep)}};
  return res;
}

CriterionResult criterion6(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 6;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  const auto& perN = rep.summary["derived"]["perN"];
  double factor = rep.summary["derived"]["refinementFactor"].get<double>();
  double spearmanWorst = 0.0;
  for (const auto& e : perN)
    spearmanWorst = std::max(spearmanWorst, e["spearman"].get<double>());

  ExperimentConfig control = c;
  control.bName = "constant";
  control.trials = std::min(cfg.trials, 20);
  control.refineN = 0;
  ExperimentReport ctrl = runExperiment(control);
  double ctrlMax = ctrl.rows.empty() ? 0.0 : maxOf(ctrl.column("l1"));

  res.passed = inBand(factor) && spearmanWorst < kSpearmanMax &&
               ctrlMax < kControlL1Tol;
  res.detail = fmt(
      "max ratio factor %.3f across N (band [0.5,2]), worst Spearman %.3f "
      "(cap %.2f), constant-b max L1 %.2e (cap %.0e)",
      factor, spearmanWorst, kSpearmanMax, ctrlMax, kControlL1Tol);
  res.reports = {{"thm51", std::move(rep)}, {"thm51-constant", std::move(ctrl)}};
  return res;
}

CriterionResult criterion7(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 7;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double factor = rep.summary["derived"]["refinementFactor"].get<double>();
  bool cross = rep.summary["derived"]["crossChecksOk"].get<bool>();
  double worst = 0.0;
  for (const auto& e : rep.summary["derived"]["perN"])
    worst = std::max(worst, e["maxMultiple"].get<double>());
  res.passed = inBand(factor) && cross;
  res.detail = fmt(
      "max molecule multiple %.3f, refinement factor %.3f (band [0.5,2]), "
      "M3/adjoint cross-checks: %s",
      worst, factor, cross ? "pass" : "FAIL");
  res.reports = {{"thm54", std::move(rep)}};
  return res;
}

CriterionResult criterion8(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 8;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double factor = rep.summary["derived"]["refinementFactor"].get<double>();
  double outsideMax = 0.0, sandLow = kInf, sandHigh = 0.0;
  bool finite = true;
  for (const auto& e : rep.summary["derived"]["perN"]) {
    outsideMax = std::max(outsideMax, e["outside2BMax"].get<double>());
    sandLow = std::min(sandLow, e["sandwichLow"].get<double>());
    sandHigh = std::max(sandHigh, e["sandwichHigh"].get<double>());
  }
  for (const auto& row : rep.rows)
    for (double v : row) finite = finite && std::isfinite(v);
  res.passed = inBand(factor) && outsideMax == 0.0 && finite;
  res.detail = fmt(
      "max-ratio refinement factor %.3f (band [0.5,2]), dictionary outside "
      "2B max %.1e (exact 0 required), sandwich constants [%.3f, %.3f]",
      factor, outsideMax, sandLow, sandHigh);
  res.reports = {{c.check, std::move(rep)}};
  return res;
}

CriterionResult criterion9(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 9;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double gamma = rep.summary["derived"]["gamma"].get<double>();
  bool all = rep.summary["derived"]["allPassed"].get<bool>();
  res.passed = all && gamma <= 1.0;
  res.detail = fmt("gamma %.4f, all %d rescaled atoms validate: %s", gamma,
                   cfg.trials, all ? "yes" : "NO");
  res.reports = {{"rescale", std::move(rep)}};
  return res;
}

CriterionResult criterion10(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 10;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double worst = rep.summary["derived"]["maxNormalizedDiff"].get<double>();
  int balls = rep.summary["derived"]["balls"].get<int>();
  res.passed = rep.summary["derived"]["passed"].get<bool>();
  res.detail = fmt(
      "sign-atom identity over %d small balls, max normalized deviation "
      "%.2e (cap %.0e)",
      balls, worst, kSignIdentityTol);
  res.reports = {{"prop412", std::move(rep)}};
  return res;
}

CriterionResult criterion11(const ExperimentConfig& cfg) {
  CriterionResult res;
  res.id = 11;
  ExperimentConfig c = cfg;
  c.criterion = 0;
  ExperimentReport rep = runExperiment(c);
  double factor = rep.summary["derived"]["refinementFactor"].get<double>();
  bool trends = rep.summary["derived"]["passed"].get<bool>();
  double maxTail = 0.0, spread = 0.0;
  for (const auto& e : rep.summary["derived"]["perN"]) {
    maxTail = std::max(maxTail, e["maxTailRatio"].get<double>());
    spread = std::max(spread, e["meanBoundSpread"].get<double>());
  }
  res.passed = trends && inBand(factor) && spread <= kMeanBoundSpreadMax;
  res.detail = fmt(
      "max weighted tail ratio %.3f, refinement factor %.3f (band [0.5,2]), "
      "tail trends: %s, mean-bound spread %.3f (cap %.1f)",
      maxTail, factor, trends ? "ok" : "FAIL", spread, kMeanBoundSpreadMax);
  res.reports = {{"tailratio", std::move(rep)}};
  return res;
}

CriterionResult criterion12(const ExperimentConfig&) {
  CriterionResult res;
  res.id = 12;
  ExperimentReport table;
  table.columns = {"criterion", "identical"};
  bool all = true;
  std::string bad;
  for (int id = 1; id <= 11; ++id) {
    ExperimentConfig c = criterionConfig(id);
    c.criterion = 0;
    // Reduced footprint: determinism does not depend on sweep size, and the
    // reduced runs still cross every parallel code path.
    c.gridN = std::min(c.gridN, 512);
    c.refineN = 0;
    c.trials = std::min(c.trials, 6);
    c.rMinExp = std::max(c.rMinExp, -4);
    setWorkerThreadOverride(1);
    std::string serial = runExperiment(c).csvString();
    setWorkerThreadOverride(4);
    std::string wide = runExperiment(c).csvString();
    setWorkerThreadOverride(0);
    bool same = serial == wide;
    all = all && same;
    if (!same) bad += fmt(" %d", id);
    table.rows.push_back({static_cast<double>(id), same ? 1.0 : 0.0});
  }
  table.summary = summarizeReport(table);
  res.passed = all;
  res.detail = all ? "all 11 reduced criterion runs byte-identical at 1 and 4 "
                     "worker threads"
                   : "thread-count-dependent CSV for criteria" + bad;
  res.reports = {{"determinism", std::move(table)}};
  return res;
}

}  // namespace

CriterionResult runCriterionWithConfig(const ExperimentConfig& cfg) {
  switch (cfg.criterion) {
    case 1: return criterion1(cfg);
    case 2: return criterion2(cfg);
    case 3: return criterion3(cfg);
    case 4: return criterion4(cfg);
    case 5: return criterion5(cfg);
    case 6: return criterion6(cfg);
    case 7: return criterion7(cfg);
    case 8: return criterion8(cfg);
    case 9: return criterion9(cfg);
    case 10: return criterion10(cfg);
    case 11: return criterion11(cfg);
    case 12: return criterion12(cfg);
    default:
      throw std::invalid_argument(
          "config does not name a criterion (criterion must be 1..12)");
  }
}

CriterionResult runCriterion(int id) {
  return runCriterionWithConfig(criterionConfig(id));
}

}  // namespace localsieve
