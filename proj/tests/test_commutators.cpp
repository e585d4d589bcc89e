#include <cmath>

#include "doctest.h"
#include "localsieve/commutators.hpp"
#include "localsieve/runtime.hpp"

using namespace localsieve;

namespace {

GridFunction clipLog(const Grid& g) {
  return GridFunction::sample(g, [](const Point& x) {
    double rho = std::max(norm2(x), 1e-300);
    return std::min(6.0, -std::log(rho));
  });
}

InhomogeneousKernel localizedHilbert() {
  return InhomogeneousKernel::fromLocalizedConvolution(hilbertKernel(),
                                                       standardBumpEta(1), 1.0);
}

double maxAbs(const GridFunction& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
  return m;
}

}  // namespace

TEST_CASE("localized convolution kernels evaluate as the product") {
  InhomogeneousKernel k = localizedHilbert();
  ConvolutionKernel base = hilbertKernel();
  Localizer eta = standardBumpEta(1);
  for (double d : {0.25, -0.5, 1.5, 3.0}) {
    Point x{d, 0.0}, y{0.0, 0.0};
    Point diff{d, 0.0};
    REQUIRE(k.evaluator(x, y) ==
            doctest::Approx(base.evaluator(diff) * eta.evaluator(diff))
                .epsilon(1e-14));
  }
  Grid g = Grid::make(1, 8.0, 256);
  SpotCheckResult spot = spotCheckInhomogeneous(k, g, 17);
  REQUIRE(spot.passed);
}

TEST_CASE("applyInhomogeneous matches the direct truncated sum") {
  Grid g = Grid::make(1, 4.0, 64);
  InhomogeneousKernel k = localizedHilbert();
  Rng rng(71);
  GridFunction f(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) f[i] = rng.symmetric();
  GridFunction fast = applyInhomogeneous(k, f);
  double h = g.spacing();
  GridFunction slow(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.cellCount(); ++j) {
      Point xi = g.point(i), xj = g.point(j);
      if (std::abs(xi[0] - xj[0]) < h) continue;
      acc += k.evaluator(xi, xj) * f[j];
    }
    slow[i] = acc * h;
  }
  for (std::size_t i = 0; i < g.cellCount(); ++i)
    REQUIRE(fast[i] == doctest::Approx(slow[i]).epsilon(1e-11));
}

TEST_CASE("transposed application is the exact adjoint") {
  Grid g = Grid::make(1, 4.0, 128);
  InhomogeneousKernel k = localizedHilbert();
  Rng rng(73);
  GridFunction f(g), w(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    f[i] = rng.symmetric();
    w[i] = rng.symmetric();
  }
  GridFunction tf = applyInhomogeneous(k, f);
  GridFunction tw = applyInhomogeneousTransposed(k, w);
  double h = g.spacing(), lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    lhs += tf[i] * w[i] * h;
    rhs += f[i] * tw[i] * h;
  }
  REQUIRE(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
}

TEST_CASE("commutator splits algebraically") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 91);
  CommutatorParts parts = commutatorApply(b, k, a);

  // total = oscillation - inside, cell by cell.
  for (std::size_t i = 0; i < g.cellCount(); i += 13)
    REQUIRE(parts.total[i] ==
            doctest::Approx(parts.oscillationTerm[i] - parts.insideTerm[i])
                .epsilon(1e-13));

  // Independent route: b T(a) - T(b a). The c_B shift cancels.
  GridFunction ta = applyInhomogeneous(k, a.values);
  GridFunction ba = hadamard(a.values, b);
  GridFunction tba = applyInhomogeneous(k, ba);
  double scale = maxAbs(parts.total) + 1.0;
  for (std::size_t i = 0; i < g.cellCount(); i += 13) {
    double direct = b[i] * ta[i] - tba[i];
    REQUIRE(std::abs(parts.total[i] - direct) < 1e-10 * scale);
  }
}

TEST_CASE("shifting the symbol by a constant leaves small-ball commutators") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  GridFunction shifted = b;
  for (std::size_t i = 0; i < g.cellCount(); ++i) shifted[i] += 3.0;
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 97);

  CommutatorParts p0 = commutatorApply(b, k, a);
  CommutatorParts p1 = commutatorApply(shifted, k, a);
  double scale = maxAbs(p0.total) + 1.0;
  for (std::size_t i = 0; i < g.cellCount(); i += 7)
    REQUIRE(std::abs(p0.total[i] - p1.total[i]) < 1e-12 * scale);
}

TEST_CASE("constant symbols commute exactly") {
  Grid g = Grid::make(1, 8.0, 256);
  GridFunction b = GridFunction::sample(g, [](const Point&) { return 1.0; });
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makeH1Atom(g, ball, 93, true);
  a.kind = AtomKind::PerezH1b;
  CommutatorParts parts = commutatorApply(b, k, a);
  REQUIRE(maxAbs(parts.total) == 0.0);

  Ball big{{0.0, 0.0}, 1.0};
  Atom wide = makeH1Atom(g, big, 95, false);
  wide.kind = AtomKind::PerezH1b;
  CommutatorParts pw = commutatorApply(b, k, wide);
  REQUIRE(maxAbs(pw.total) == 0.0);
}

TEST_CASE("commutator certificates expose the split and the molecule") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 97);
  CommutatorCertificate cert = certifyCommutator(b, k, a, -1.0, true, 0.5);
  REQUIRE(cert.l1Norm > 0.0);
  REQUIRE(cert.bmoNorm > 0.0);
  REQUIRE(cert.ratio == doctest::Approx(cert.l1Norm / cert.bmoNorm));
  REQUIRE(cert.moleculeCert.has_value());
  REQUIRE(cert.moleculeCert->s == doctest::Approx(1.5));
  REQUIRE(cert.moleculeCert->lambda == doctest::Approx(0.5 + 0.5));
}

TEST_CASE("molecule check rejects out-of-range decay margins") {
  Grid g = Grid::make(1, 8.0, 256);
  GridFunction b = clipLog(g);
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 101);
  REQUIRE_THROWS_AS(commutatorMoleculeCheck(b, k, a, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(commutatorMoleculeCheck(b, k, a, 2.0),
                    std::invalid_argument);
  MoleculeCertificate mc = commutatorMoleculeCheck(b, k, a, 0.75);
  REQUIRE(mc.s == doctest::Approx(1.5));
  REQUIRE(mc.lambda == doctest::Approx(0.5 + 0.75));
  REQUIRE(mc.m1.observed > 0.0);
  REQUIRE(std::isfinite(mc.m2.observed));
  REQUIRE(std::isfinite(mc.m3.observed));
}

TEST_CASE("t-star pairing equals the direct integral") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  InhomogeneousKernel k = localizedHilbert();
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 103);
  TStarPairing tp = tStarPairing(k, b, ball, a.values);
  REQUIRE(tp.trendOk);

  GridFunction ta = applyInhomogeneous(k, a.values);
  double bB = ballMean(b, ball);
  double h = g.spacing(), direct = 0.0;
  for (std::size_t i = 0; i < g.cellCount(); ++i)
    direct += (b[i] - bB) * ta[i] * h;
  REQUIRE(std::abs(tp.value - direct) < 1e-11 * (1.0 + std::abs(direct)));
}

TEST_CASE("t-star symbol condition holds for bounded symbols") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  InhomogeneousKernel k = localizedHilbert();
  TStarBCondition cond = tStarBCondition(k, b, Ball{{0.5, 0.0}, 0.25});
  REQUIRE(cond.oscillation >= 0.0);
  REQUIRE(cond.bound > 0.0);
  REQUIRE(cond.passed);
  REQUIRE_THROWS_AS(tStarBCondition(k, b, Ball{{0.0, 0.0}, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("sign-pattern atoms realize the mean oscillation") {
  Grid g = Grid::make(1, 4.0, 256);
  GridFunction b = clipLog(g);
  BallFamily fam = BallFamily::standard(g);
  auto rows = signAtomIdentitySweep(b, fam);
  REQUIRE_FALSE(rows.empty());
  for (const SignAtomRow& row : rows) {
    REQUIRE(row.radius < 1.0);  // the identity is a small-ball statement
    REQUIRE(row.difference < 1e-11 * (1.0 + row.meanOscillation));
  }
}

TEST_CASE("a-b constants are finite and dominated by their sup") {
  Grid g = Grid::make(1, 4.0, 256);
  GridFunction b = clipLog(g);
  BallFamily fam = BallFamily::standard(g);
  ABConstantReport rep = aBConstantSweep(b, fam);
  REQUIRE_FALSE(rep.rows.empty());
  for (const ABConstantRow& row : rep.rows) {
    REQUIRE(std::isfinite(row.ratio));
    REQUIRE(row.ratio <= rep.sup * (1.0 + 1e-12));
    REQUIRE(row.measure > 0.0);
  }
}
