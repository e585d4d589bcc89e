#include "localsieve/commutators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double resolveCut(const Grid& g, double eps) {
  double h = g.spacing();
  if (eps <= 0.0) return h;
  if (eps < 0.5 * h * (1.0 - 1e-12))
    throw std::invalid_argument("truncation below half the grid spacing");
  return eps;
}

std::vector<std::size_t> nonzeroCells(const GridFunction& f) {
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0) nz.push_back(i);
  return nz;
}

// Inclusion uses a 1e-9 relative slop so coordinate roundoff cannot drop a
// boundary pair; on power-of-two boxes the differences are exact and the
// slop is inert.
bool separated(const Point& x, const Point& y, double cut) {
  double dx = x[0] - y[0], dy = x[1] - y[1];
  return std::sqrt(dx * dx + dy * dy) >= cut * (1.0 - 1e-9);
}

}  // namespace

InhomogeneousKernel InhomogeneousKernel::fromLocalizedConvolution(
    const ConvolutionKernel& k, const Localizer& eta, double extraDecay) {
  if (eta.kind != Localizer::Kind::Eta)
    throw std::invalid_argument("localized kernel needs a multiplicative eta");
  if (eta.dim != k.dim)
    throw std::invalid_argument("kernel and localizer dimensions differ");
  if (!(extraDecay > 0.0))
    throw std::invalid_argument("extraDecay must be positive");
  InhomogeneousKernel out;
  out.name = k.name + "*" + eta.name;
  out.dim = k.dim;
  out.delta = std::min(k.delta, eta.delta);
  out.extraDecay = extraDecay;
  // Standard-bump constants: sup|eta| = 1 and supp(eta) in {|z| <= 2}.
  out.sizeConstant =
      k.sizeConstant * std::pow(2.0, extraDecay) * (1.0 + 1e-9);
  auto kernel = k.evaluator;
  auto window = eta.evaluator;
  out.evaluator = [kernel, window](const Point& x, const Point& y) {
    Point d{x[0] - y[0], x[1] - y[1]};
    return kernel(d) * window(d);
  };
  return out;
}

SpotCheckResult spotCheckInhomogeneous(const InhomogeneousKernel& k,
                                       const Grid& g, std::uint64_t seed,
                                       int budget) {
  if (k.dim != g.dim)
    throw std::invalid_argument("kernel dimension mismatch");
  Rng rng(seed);
  const double L = g.halfWidth;
  const int n = g.dim;
  SpotCheckResult res;
  auto boxPoint = [&]() {
    Point p{rng.uniform(-L, L), 0.0};
    if (n == 2) p[1] = rng.uniform(-L, L);
    return p;
  };
  for (int t = 0; t < budget; ++t) {
    Point x = boxPoint();
    Point y;
    if (t % 2 == 0) {
      y = boxPoint();
    } else {
      // Near-diagonal pair at a log-uniform separation.
      double dist = rng.logUniform(1e-6 * L, 2.0 * L);
      double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      y = x;
      if (n == 1) {
        y[0] += (rng.uniform() < 0.5 ? -dist : dist);
      } else {
        y[0] += dist * std::cos(angle);
        y[1] += dist * std::sin(angle);
      }
      if (std::abs(y[0]) > L || std::abs(y[1]) > L) continue;
    }
    double dx = x[0] - y[0], dy = x[1] - y[1];
    double d = std::sqrt(dx * dx + dy * dy);
    if (d < 1e-9) continue;
    double bound = k.sizeConstant *
        std::min(std::pow(d, -double(n)), std::pow(d, -double(n) - k.extraDecay));
    double ratio = std::abs(k.evaluator(x, y)) / bound;
    res.maxRatio = std::max(res.maxRatio, ratio);
  }
  res.passed = res.maxRatio <= 1.0 + 1e-9;
  return res;
}

GridFunction applyInhomogeneous(const InhomogeneousKernel& k,
                                const GridFunction& f, double eps) {
  const Grid& g = f.grid;
  if (k.dim != g.dim)
    throw std::invalid_argument("kernel dimension mismatch");
  const double cut = resolveCut(g, eps);
  const double hN = std::pow(g.spacing(), g.dim);
  auto nz = nonzeroCells(f);
  GridFunction out(g);
  parallelFor(g.cellCount(), [&](std::size_t i) {
    Point x = g.point(i);
    double acc = 0.0;
    for (auto j : nz) {
      Point y = g.point(j);
      if (!separated(x, y, cut)) continue;
      acc += k.evaluator(x, y) * f[j];
    }
    out[i] = acc * hN;
  });
  return out;
}

GridFunction applyInhomogeneousTransposed(const InhomogeneousKernel& k,
                                          const GridFunction& f, double eps) {
  const Grid& g = f.grid;
  if (k.dim != g.dim)
    throw std::invalid_argument("kernel dimension mismatch");
  const double cut = resolveCut(g, eps);
  const double hN = std::pow(g.spacing(), g.dim);
  auto nz = nonzeroCells(f);
  GridFunction out(g);
  parallelFor(g.cellCount(), [&](std::size_t i) {
    Point y = g.point(i);
    double acc = 0.0;
    for (auto j : nz) {
      Point x = g.point(j);
      if (!separated(x, y, cut)) continue;
      acc += k.evaluator(x, y) * f[j];
    }
    out[i] = acc * hN;
  });
  return out;
}

CommutatorParts commutatorApply(const GridFunction& b,
                                const InhomogeneousKernel& k, const Atom& a,
                                double eps) {
  requireSameGrid(a.values.grid, b.grid);
  const Grid& g = b.grid;
  const double cB = cBall(b, a.ball);

  GridFunction ta = applyInhomogeneous(k, a.values, eps);
  GridFunction shifted(g);
  for (std::size_t i = 0; i < shifted.size(); ++i)
    shifted[i] = a.values[i] * (b[i] - cB);
  GridFunction tShifted = applyInhomogeneous(k, shifted, eps);

  CommutatorParts parts;
  parts.oscillationTerm = GridFunction(g);
  for (std::size_t i = 0; i < ta.size(); ++i)
    parts.oscillationTerm[i] = (b[i] - cB) * ta[i];
  parts.insideTerm = std::move(tShifted);
  parts.total = parts.oscillationTerm;
  parts.total -= parts.insideTerm;
  return parts;
}

namespace {

MoleculeCertificate moleculeOfOscillation(const GridFunction& oscillation,
                                          const InhomogeneousKernel& k,
                                          const Ball& ball, double mu) {
  double muMax = 1.5 * std::min(k.delta, k.extraDecay);
  if (!(mu > 0.0 && mu < muMax))
    throw std::invalid_argument(
        "mu must lie in (0, 1.5 min(delta, extraDecay))");
  Ball doubled{ball.center, 2.0 * ball.radius};
  double lambda = oscillation.grid.dim / 2.0 + mu;
  return validateMolecule(oscillation, doubled, 1.5, lambda);
}

}  // namespace

CommutatorCertificate certifyCommutator(const GridFunction& b,
                                        const InhomogeneousKernel& k,
                                        const Atom& a, double bmoVal,
                                        bool withMolecule, double mu) {
  auto parts = commutatorApply(b, k, a);
  CommutatorCertificate cert;
  cert.l1Norm = lpNorm(parts.total, 1.0);
  cert.bmoNorm = bmoVal >= 0.0
                     ? bmoVal
                     : bmoNormValue(b, BallFamily::standard(b.grid), 1);
  cert.ratio = cert.bmoNorm > 0.0
                   ? cert.l1Norm / cert.bmoNorm
                   : (cert.l1Norm > 0.0 ? kInf : 0.0);
  cert.splitTerms = {lpNorm(parts.oscillationTerm, 1.0),
                     lpNorm(parts.insideTerm, 1.0)};
  if (withMolecule)
    cert.moleculeCert =
        moleculeOfOscillation(parts.oscillationTerm, k, a.ball, mu);
  return cert;
}

TStarPairing tStarPairing(const InhomogeneousKernel& k, const GridFunction& b,
                          const Ball& ball, const GridFunction& g,
                          double eps) {
  requireSameGrid(b.grid, g.grid);
  const Grid& gr = b.grid;

  double outside = lpNorm(g, 1.0, ball, Region::Outside);
  if (outside != 0.0)
    throw std::invalid_argument("pairing input must be supported in the ball");
  double mass = integrate(g);
  if (std::abs(mass) > kAtomSlack * std::max(1.0, lpNorm(g, 1.0)))
    throw std::invalid_argument("pairing input must have zero mean");

  const double bB = ballMean(b, ball);
  GridFunction tg = applyInhomogeneous(k, g, eps);
  const double hN = std::pow(gr.spacing(), gr.dim);

  double farthest = 0.0;
  for (int d = 0; d < gr.dim; ++d)
    farthest += std::pow(std::abs(ball.center[d]) + gr.halfWidth, 2.0);
  farthest = std::sqrt(farthest);
  std::vector<double> edges{ball.radius};
  while (edges.back() < farthest) edges.push_back(edges.back() * 2.0);

  TStarPairing rep;
  std::vector<double> shellMass(edges.size(), 0.0);
  double value = 0.0;
  for (std::size_t i = 0; i < tg.size(); ++i) {
    double term = (b[i] - bB) * tg[i] * hN;
    value += term;
    Point x = gr.point(i);
    double dist = std::hypot(x[0] - ball.center[0], x[1] - ball.center[1]);
    std::size_t shell = 0;
    while (shell + 1 < edges.size() && dist > edges[shell]) ++shell;
    shellMass[shell] += std::abs(term);
  }
  rep.value = value;
  for (std::size_t s = 0; s < edges.size(); ++s)
    rep.shells.emplace_back(edges[s], shellMass[s]);
  rep.trendOk = tailShellsConverged(rep.shells);
  return rep;
}

TStarBCondition tStarBCondition(const InhomogeneousKernel& k,
                                const GridFunction& b, const Ball& ball,
                                double eps) {
  if (!(ball.radius < 1.0))
    throw std::invalid_argument("oscillation condition applies to r < 1");
  const Grid& gr = b.grid;
  if (k.dim != gr.dim)
    throw std::invalid_argument("kernel dimension mismatch");
  const double cut = resolveCut(gr, eps);
  const double hN = std::pow(gr.spacing(), gr.dim);
  const double bB = ballMean(b, ball);

  auto cells = cellsInBall(gr, ball);
  // f(y) = sum_x K(x, y) (b(x) - b_B) h^n, evaluated on the ball only.
  std::vector<double> f(cells.size(), 0.0);
  parallelFor(cells.size(), [&](std::size_t q) {
    Point y = gr.point(cells[q]);
    double acc = 0.0;
    for (std::size_t j = 0; j < gr.cellCount(); ++j) {
      Point x = gr.point(j);
      if (!separated(x, y, cut)) continue;
      acc += k.evaluator(x, y) * (b[j] - bB);
    }
    f[q] = acc * hN;
  });

  double fMean = 0.0;
  for (double v : f) fMean += v;
  fMean /= double(f.size());
  double osc2 = 0.0;
  for (double v : f) osc2 += (v - fMean) * (v - fMean);
  osc2 /= double(f.size());

  TStarBCondition res;
  res.oscillation = std::sqrt(osc2);
  res.bound = std::log1p(1.0 / ball.radius);
  res.passed = res.oscillation <= res.bound;
  return res;
}

MoleculeCertificate commutatorMoleculeCheck(const GridFunction& b,
                                            const InhomogeneousKernel& k,
                                            const Atom& a, double mu,
                                            double eps) {
  requireSameGrid(a.values.grid, b.grid);
  GridFunction ta = applyInhomogeneous(k, a.values, eps);
  const double cB = cBall(b, a.ball);
  GridFunction m(b.grid);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (b[i] - cB) * ta[i];
  return moleculeOfOscillation(m, k, a.ball, mu);
}

std::vector<SignAtomRow> signAtomIdentitySweep(const GridFunction& b,
                                               const BallFamily& fam) {
  const Grid& g = b.grid;
  const double hN = std::pow(g.spacing(), g.dim);
  std::vector<SignAtomRow> rows;
  for (const auto& ball : fam.balls(g)) {
    if (!(ball.radius < 1.0)) continue;
    auto cells = cellsInBall(g, ball);
    if (cells.empty()) continue;
    const double bB = ballMean(b, ball);
    const double m = double(cells.size()) * hN;

    double sSum = 0.0;
    for (auto c : cells) {
      double d = b[c] - bB;
      sSum += d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
    double sB = sSum / double(cells.size());

    double osc = 0.0, pair = 0.0;
    for (auto c : cells) {
      double d = b[c] - bB;
      double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      osc += std::abs(d);
      pair += (s - sB) * b[c];
    }
    SignAtomRow row;
    row.center = ball.center;
    row.radius = ball.radius;
    row.meanOscillation = osc / double(cells.size());
    row.pairing = pair * hN / m;
    row.difference = std::abs(row.meanOscillation - row.pairing);
    rows.push_back(row);
  }
  return rows;
}

ABConstantReport aBConstantSweep(const GridFunction& b,
                                 const BallFamily& fam) {
  const Grid& g = b.grid;
  ABConstantReport rep;
  auto balls = fam.balls(g);
  rep.rows.resize(balls.size());
  parallelFor(balls.size(), [&](std::size_t q) {
    const Ball& ball = balls[q];
    auto cells = cellsInBall(g, ball);
    GridFunction piece(g);
    if (ball.radius < 1.0) {
      double bB = ballMean(b, ball);
      for (auto c : cells) piece[c] = std::abs(b[c] - bB);
    } else {
      for (auto c : cells) piece[c] = std::abs(b[c]);
    }
    ABConstantRow row;
    row.center = ball.center;
    row.radius = ball.radius;
    row.h1Estimate = h1NormEstimateDefault(piece);
    row.measure = ballMeasure(g, ball);
    row.ratio = row.h1Estimate / row.measure;
    rep.rows[q] = row;
  });
  for (const auto& row : rep.rows) rep.sup = std::max(rep.sup, row.ratio);
  return rep;
}

}  // namespace localsieve
