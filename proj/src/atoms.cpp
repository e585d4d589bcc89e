#include "localsieve/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace localsieve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Local view of a ball: flat cell indices plus the discrete measure.
struct BallFrame {
  std::vector<std::size_t> cells;
  double cellVolume = 0.0;  // h^dim
  double measure = 0.0;     // #cells * h^dim
};

BallFrame frameFor(const Grid& g, const Ball& ball, std::size_t minCells) {
  BallFrame fr;
  fr.cells = cellsInBall(g, ball);
  if (fr.cells.size() < minCells)
    throw std::invalid_argument(
        "atom ball holds " + std::to_string(fr.cells.size()) +
        " cells; need at least " + std::to_string(minCells));
  fr.cellVolume = std::pow(g.spacing(), g.dim);
  fr.measure = double(fr.cells.size()) * fr.cellVolume;
  return fr;
}

double dotOn(const BallFrame& fr, const std::vector<double>& u,
             const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t q = 0; q < u.size(); ++q) s += u[q] * v[q];
  return s * fr.cellVolume;
}

double meanOf(const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x;
  return s / double(u.size());
}

std::vector<double> randomOn(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<double> u(count);
  for (auto& x : u) x = rng.symmetric();
  return u;
}

// Scatters ball-local values onto the grid and measures the certificate
// quantities from the scattered function.
Atom finalizeAtom(const Grid& g, const Ball& ball, const BallFrame& fr,
                  const std::vector<double>& local, AtomKind kind,
                  const GridFunction* b, std::string note) {
  Atom a;
  a.values = GridFunction(g);
  for (std::size_t q = 0; q < fr.cells.size(); ++q)
    a.values[fr.cells[q]] = local[q];
  a.ball = ball;
  a.kind = kind;
  a.note = std::move(note);
  a.l2Norm = lpNorm(a.values, 2.0);
  a.lInfNorm = lpNorm(a.values, kInf);
  a.integral = integrate(a.values);
  if (b) {
    double cB = cBall(*b, ball);
    double s = 0.0;
    for (std::size_t q = 0; q < fr.cells.size(); ++q)
      s += local[q] * ((*b)[fr.cells[q]] - cB);
    a.bPairing = s * fr.cellVolume;
  }
  return a;
}

// Random ball-local sample, L2-normalized to measure^{-1/2}, with no
// cancellation imposed. Shared by every r >= 1 branch.
Atom sizeOnlyAtom(const Grid& g, const Ball& ball, const BallFrame& fr,
                  std::uint64_t seed, AtomKind kind, const GridFunction* b) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    auto u = randomOn(attempt == 0 ? seed : subSeed(seed, 100 + attempt),
                      fr.cells.size());
    double n2 = std::sqrt(dotOn(fr, u, u));
    if (n2 <= 1e-12 * std::sqrt(fr.measure)) continue;
    double scale = 1.0 / (std::sqrt(fr.measure) * n2);
    for (auto& x : u) x *= scale;
    return finalizeAtom(g, ball, fr, u, kind, b, {});
  }
  throw std::runtime_error("random atom degenerated for every retry seed");
}

}  // namespace

std::string atomKindName(AtomKind kind) {
  switch (kind) {
    case AtomKind::Goldberg: return "goldberg";
    case AtomKind::Approximate12: return "approximate12";
    case AtomKind::PerezH1b: return "perezH1b";
    case AtomKind::ApproxH1b: return "approxH1b";
  }
  return "unknown";
}

bool AtomCertificate::allPassed() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const AtomCondition& c) { return c.passed; });
}

const AtomCondition& AtomCertificate::at(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw std::out_of_range("no condition named " + name);
}

nlohmann::ordered_json AtomCertificate::toJson() const {
  nlohmann::ordered_json j;
  j["subject"] = subject;
  j["passed"] = allPassed();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["observed"] = c.observed;
    e["bound"] = c.bound;
    if (c.bound > 0.0)
      e["ratio"] = c.observed / c.bound;
    else
      e["ratio"] = nullptr;
    e["passed"] = c.passed;
    arr.push_back(std::move(e));
  }
  j["conditions"] = std::move(arr);
  return j;
}

Atom makeH1Atom(const Grid& g, const Ball& ball, std::uint64_t seed,
                bool cancel) {
  if (!ballInsideBox(g, ball))
    throw std::invalid_argument("atom ball must lie inside the box");
  auto fr = frameFor(g, ball, 3);
  if (!(cancel && ball.radius < 1.0))
    return sizeOnlyAtom(g, ball, fr, seed, AtomKind::Approximate12, nullptr);
  for (int attempt = 0; attempt < 8; ++attempt) {
    auto u = randomOn(attempt == 0 ? seed : subSeed(seed, 100 + attempt),
                      fr.cells.size());
    double mean = meanOf(u);
    for (auto& x : u) x -= mean;
    double n2 = std::sqrt(dotOn(fr, u, u));
    if (n2 <= 1e-12 * std::sqrt(fr.measure)) continue;
    double scale = 1.0 / (std::sqrt(fr.measure) * n2);
    for (auto& x : u) x *= scale;
    return finalizeAtom(g, ball, fr, u, AtomKind::Approximate12, nullptr, {});
  }
  throw std::runtime_error("random atom degenerated for every retry seed");
}

Atom makePerezH1bAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                      std::uint64_t seed) {
  requireSameGrid(g, b.grid);
  if (!ballInsideBox(g, ball))
    throw std::invalid_argument("atom ball must lie inside the box");
  auto fr = frameFor(g, ball, 3);
  if (ball.radius >= 1.0)
    return sizeOnlyAtom(g, ball, fr, seed, AtomKind::PerezH1b, &b);

  const std::size_t count = fr.cells.size();
  std::vector<double> bloc(count);
  for (std::size_t q = 0; q < count; ++q) bloc[q] = b[fr.cells[q]];
  double bMean = meanOf(bloc);
  std::vector<double> w(count);
  for (std::size_t q = 0; q < count; ++q) w[q] = bloc[q] - bMean;
  double wNorm2 = dotOn(fr, w, w);
  double bScale = std::sqrt(dotOn(fr, bloc, bloc));
  // b constant on the ball: span{1, b} has rank 1 and the projection
  // degrades to plain mean removal.
  bool rankTwo = std::sqrt(wNorm2) > 1e-12 * (1.0 + bScale);

  for (int attempt = 0; attempt < 8; ++attempt) {
    auto u = randomOn(attempt == 0 ? seed : subSeed(seed, 100 + attempt),
                      count);
    double mean = meanOf(u);
    for (auto& x : u) x -= mean;
    if (rankTwo) {
      double c = dotOn(fr, u, w) / wNorm2;
      for (std::size_t q = 0; q < count; ++q) u[q] -= c * w[q];
    }
    double n2 = std::sqrt(dotOn(fr, u, u));
    if (n2 <= 1e-10 * std::sqrt(fr.measure)) continue;
    double scale = 1.0 / (std::sqrt(fr.measure) * n2);
    for (auto& x : u) x *= scale;
    return finalizeAtom(g, ball, fr, u, AtomKind::PerezH1b, &b, {});
  }
  throw std::runtime_error("projection annihilated the sample for 8 seeds");
}

Atom makeApproxH1bAtom(const Grid& g, const Ball& ball, const GridFunction& b,
                       std::uint64_t seed, double meanBudget) {
  if (!(meanBudget >= 0.0 && meanBudget <= 1.0))
    throw std::invalid_argument("meanBudget must lie in [0, 1]");
  Atom core = makePerezH1bAtom(g, ball, b, subSeed(seed, 1));
  core.kind = AtomKind::ApproxH1b;
  // r >= 1: the size bound already implies the mean budget, nothing to add.
  if (ball.radius >= 1.0) return core;

  double logr = std::log1p(1.0 / ball.radius);
  double beta = meanBudget / (logr * logr);
  std::string note;
  if (beta > 1.0) {
    beta = 1.0;
    note = "mean budget clamped by the L2 normalization";
  }
  double sign = Rng(subSeed(seed, 2)).uniform() < 0.5 ? -1.0 : 1.0;
  double gamma = std::sqrt(std::max(0.0, 1.0 - beta * beta));

  auto fr = frameFor(g, ball, 3);
  // The indicator is L2-orthogonal to the projected core, so the pair
  // (gamma, beta) fills the L2 budget exactly while the mean is beta and
  // the pairing with b - c_B stays zero.
  double indicator = 1.0 / fr.measure;
  std::vector<double> local(fr.cells.size());
  for (std::size_t q = 0; q < fr.cells.size(); ++q)
    local[q] = gamma * core.values[fr.cells[q]] + sign * beta * indicator;
  return finalizeAtom(g, ball, fr, local, AtomKind::ApproxH1b, &b,
                      std::move(note));
}

AtomCertificate validateAtom(const Atom& a, const GridFunction* b, double cb) {
  const Grid& g = a.values.grid;
  const Ball& ball = a.ball;
  const double r = ball.radius;
  const double m = ballMeasure(g, ball);
  const double logr = std::log1p(1.0 / r);
  const double hN = std::pow(g.spacing(), g.dim);

  const double l2 = lpNorm(a.values, 2.0);
  const double linf = lpNorm(a.values, kInf);
  const double l1 = lpNorm(a.values, 1.0);
  const double integ = integrate(a.values);
  const double outside = lpNorm(a.values, 1.0, ball, Region::Outside);

  AtomCertificate cert;
  cert.subject = atomKindName(a.kind);
  auto push = [&](std::string name, double obs, double bound,
                  bool relativeSlack) {
    bool ok = relativeSlack ? obs <= bound * (1.0 + kAtomSlack) : obs <= bound;
    cert.conditions.push_back({std::move(name), obs, bound, ok});
  };
  push("support", outside, 0.0, false);

  const bool small = r < 1.0;
  const bool needsB =
      a.kind == AtomKind::PerezH1b || a.kind == AtomKind::ApproxH1b;
  if (needsB && small && b == nullptr)
    throw std::invalid_argument("validation of b-weighted kinds requires b");

  switch (a.kind) {
    case AtomKind::Goldberg: {
      push("size_linf", linf, 1.0 / m, true);
      if (small)
        push("mean", std::abs(integ), kAtomSlack * std::max(1.0, l1), false);
      break;
    }
    case AtomKind::Approximate12: {
      push("size_l2", l2, 1.0 / std::sqrt(m), true);
      if (small) push("mean", std::abs(integ), 1.0 / logr, true);
      break;
    }
    case AtomKind::PerezH1b: {
      push("size_l2", l2, 1.0 / std::sqrt(m), true);
      if (small) {
        push("mean", std::abs(integ), kAtomSlack * std::max(1.0, l1), false);
        double bOnBall = lpNorm(*b, 2.0, ball, Region::Inside);
        double bInt = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
          bInt += a.values[i] * (*b)[i];
        bInt *= hN;
        push("b_mean", std::abs(bInt),
             kAtomSlack * std::max(1.0, l2 * bOnBall), false);
      }
      break;
    }
    case AtomKind::ApproxH1b: {
      push("size_l2", l2, 1.0 / std::sqrt(m), true);
      if (small) {
        push("mean", std::abs(integ), 1.0 / (logr * logr), true);
        double cbEff =
            cb >= 0.0 ? cb : bmoNormValue(*b, BallFamily::standard(g), 2);
        double cB = cBall(*b, ball);
        double pairing = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
          pairing += a.values[i] * ((*b)[i] - cB);
        pairing *= hN;
        double bOnBall = lpNorm(*b, 2.0, ball, Region::Inside);
        double cushion = kAtomSlack *
            std::max(1.0, l2 * (bOnBall + std::abs(cB) * std::sqrt(m)));
        push("b_pairing", std::abs(pairing), cbEff / logr + cushion, true);
      }
      break;
    }
  }
  return cert;
}

nlohmann::ordered_json MoleculeCertificate::toJson() const {
  nlohmann::ordered_json j;
  j["s"] = s;
  j["lambda"] = lambda;
  j["ball"] = {{"center", {ball.center[0], ball.center[1]}},
               {"radius", ball.radius}};
  auto cond = [](const AtomCondition& c) {
    nlohmann::ordered_json e;
    e["observed"] = c.observed;
    e["bound"] = c.bound;
    e["ratio"] = c.bound > 0.0
                     ? nlohmann::ordered_json(c.observed / c.bound)
                     : nlohmann::ordered_json(nullptr);
    e["passed"] = c.passed;
    return e;
  };
  j["m1"] = cond(m1);
  j["m2"] = cond(m2);
  j["m3"] = cond(m3);
  j["trend_ok"] = trendOk;
  auto shells = nlohmann::ordered_json::array();
  for (const auto& [edge, mass] : tailShells) shells.push_back({edge, mass});
  j["tail_shells"] = std::move(shells);
  j["passed"] = passed;
  return j;
}

MoleculeCertificate validateMolecule(const GridFunction& m, const Ball& ball,
                                     double s, double lambda) {
  const Grid& g = m.grid;
  const int n = g.dim;
  if (!(s > 1.0 && std::isfinite(s)))
    throw std::invalid_argument("molecule exponent s must lie in (1, inf)");
  if (!(lambda > n * (s - 1.0)))
    throw std::invalid_argument("molecule decay must satisfy lambda > n(s-1)");

  MoleculeCertificate cert;
  cert.s = s;
  cert.lambda = lambda;
  cert.ball = ball;
  const double r = ball.radius;
  const double hN = std::pow(g.spacing(), g.dim);
  const double slack = 1.0 + kMoleculeSlack;

  double m1Obs = lpNorm(m, s, ball, Region::Inside);
  double m1Bound = std::pow(r, n * (1.0 / s - 1.0));
  cert.m1 = {"m1_size", m1Obs, m1Bound, m1Obs <= m1Bound * slack};

  // Weighted tail integrand |M|^s |x-x0|^lambda, truncated at the box and
  // binned into doubling shells for the decay trend.
  double farthest = 0.0;
  for (int d = 0; d < n; ++d)
    farthest += std::pow(std::abs(ball.center[d]) + g.halfWidth, 2.0);
  farthest = std::sqrt(farthest);
  std::vector<double> edges{r};
  while (edges.back() < farthest) edges.push_back(edges.back() * 2.0);
  std::vector<double> shellMass(edges.size(), 0.0);

  auto inside = cellsInBall(g, ball);
  std::vector<char> isInside(g.cellCount(), 0);
  for (auto c : inside) isInside[c] = 1;
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (isInside[i] || m[i] == 0.0) continue;
    Point x = g.point(i);
    double dist = std::hypot(x[0] - ball.center[0], x[1] - ball.center[1]);
    double contrib = std::pow(std::abs(m[i]), s) * std::pow(dist, lambda) * hN;
    total += contrib;
    std::size_t shell = 1;
    while (shell + 1 < edges.size() && dist > edges[shell]) ++shell;
    shellMass[shell] += contrib;
  }
  double m2Obs = std::pow(total, 1.0 / s);
  double m2Bound = std::pow(r, lambda / s + n * (1.0 / s - 1.0));
  cert.m2 = {"m2_tail", m2Obs, m2Bound, m2Obs <= m2Bound * slack};
  for (std::size_t sIx = 1; sIx < edges.size(); ++sIx)
    cert.tailShells.emplace_back(edges[sIx], shellMass[sIx]);
  cert.trendOk = tailShellsConverged(cert.tailShells);

  double m3Obs = std::abs(integrate(m));
  double m3Bound = 1.0 / std::log1p(1.0 / r);
  cert.m3 = {"m3_mean", m3Obs, m3Bound, m3Obs <= m3Bound * slack};

  cert.passed = cert.m1.passed && cert.m2.passed && cert.m3.passed;
  return cert;
}

DecompositionResult decomposeApproxAtom(const Atom& a, const GridFunction& b) {
  const Grid& g = a.values.grid;
  requireSameGrid(g, b.grid);
  const double r = a.ball.radius;
  if (r >= 1.0)
    throw std::invalid_argument("decomposition applies to radii below 1 only");

  const int n = g.dim;
  const double hN = std::pow(g.spacing(), g.dim);
  DecompositionResult res;
  res.alpha = integrate(a.values);
  const double logr = std::log1p(1.0 / r);
  res.ellOneBound =
      3.0 + std::pow(2.0, n) * (std::log2(1.0 / r) + 1.0) / logr;

  auto measured = [&](GridFunction v, const Ball& ball) {
    Atom out;
    out.values = std::move(v);
    out.ball = ball;
    out.kind = AtomKind::ApproxH1b;
    out.l2Norm = lpNorm(out.values, 2.0);
    out.lInfNorm = lpNorm(out.values, kInf);
    out.integral = integrate(out.values);
    double cB = cBall(b, ball);
    double s = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
      s += out.values[i] * (b[i] - cB);
    out.bPairing = s * hN;
    return out;
  };

  // Zero mean already: the input is its own decomposition.
  if (std::abs(res.alpha) <= 1e-13) {
    res.k = 0;
    res.coefficients = {1.0};
    res.atoms.push_back(measured(a.values, a.ball));
    res.ellOneSum = 1.0;
    res.reconstruction = a.values;
    res.reconstructionError = 0.0;
    return res;
  }

  int k = 0;
  while (std::ldexp(r, k) < 1.0) ++k;  // smallest k with 2^k r >= 1
  res.k = k;

  std::vector<Ball> balls;
  for (int j = 0; j <= k; ++j)
    balls.push_back({a.ball.center, std::ldexp(r, j)});
  if (!ballInsideBox(g, balls.back()))
    throw std::runtime_error(
        "decomposition chain leaves the box; enlarge the box or shrink r");

  std::vector<GridFunction> eta;
  for (const auto& ball : balls) {
    GridFunction e(g);
    auto cells = cellsInBall(g, ball);
    double inv = 1.0 / (double(cells.size()) * hN);
    for (auto c : cells) e[c] = inv;
    eta.push_back(std::move(e));
  }

  const double twoN = std::pow(2.0, n);

  GridFunction head(g);
  for (std::size_t i = 0; i < head.size(); ++i)
    head[i] = (a.values[i] - res.alpha * eta[0][i]) * 0.5;
  res.coefficients.push_back(2.0);
  res.atoms.push_back(measured(std::move(head), balls[0]));

  for (int j = 1; j <= k; ++j) {
    double rj = std::ldexp(r, j);
    double normj = twoN * std::log1p(1.0 / rj);
    GridFunction link(g);
    for (std::size_t i = 0; i < link.size(); ++i)
      link[i] = (eta[j - 1][i] - eta[j][i]) / normj;
    res.coefficients.push_back(res.alpha * normj);
    res.atoms.push_back(measured(std::move(link), balls[j]));
  }

  res.coefficients.push_back(res.alpha);
  res.atoms.push_back(measured(eta[k], balls[k]));

  GridFunction recon(g);
  for (std::size_t t = 0; t < res.atoms.size(); ++t)
    for (std::size_t i = 0; i < recon.size(); ++i)
      recon[i] += res.coefficients[t] * res.atoms[t].values[i];
  double err = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i)
    err = std::max(err, std::abs(recon[i] - a.values[i]));
  res.reconstruction = std::move(recon);
  res.reconstructionError = err;
  for (double c : res.coefficients) res.ellOneSum += std::abs(c);
  return res;
}

ProductReport abcCancellationProduct(const Atom& a, const GridFunction& b,
                                     const BallFamily* family) {
  const Grid& g = a.values.grid;
  requireSameGrid(g, b.grid);
  ProductReport rep;
  double cB = cBall(b, a.ball);
  rep.product = GridFunction(g);
  for (std::size_t i = 0; i < rep.product.size(); ++i)
    rep.product[i] = a.values[i] * (b[i] - cB);

  rep.normS1 = lpNorm(rep.product, 1.0);
  rep.normS32 = lpNorm(rep.product, 1.5);
  BallFamily fam = family ? *family : BallFamily::standard(g);
  double m = ballMeasure(g, a.ball);
  rep.boundS1 = bmoNormValue(b, fam, 2);
  rep.boundS32 = bmoNormValue(b, fam, 6) * std::pow(m, 1.0 / 1.5 - 1.0);
  auto ratio = [](double obs, double bound) {
    if (bound > 0.0) return obs / bound;
    return obs > 0.0 ? kInf : 0.0;
  };
  rep.ratioS1 = ratio(rep.normS1, rep.boundS1);
  rep.ratioS32 = ratio(rep.normS32, rep.boundS32);

  rep.holderLhs = rep.normS32;
  double hN = std::pow(g.spacing(), g.dim);
  double p6 = 0.0;
  for (auto c : cellsInBall(g, a.ball))
    p6 += std::pow(std::abs(b[c] - cB), 6.0);
  rep.holderRhs = lpNorm(a.values, 2.0) * std::pow(p6 * hN, 1.0 / 6.0);
  return rep;
}

}  // namespace localsieve
