#include <cmath>

#include "doctest.h"
#include "localsieve/atoms.hpp"
#include "localsieve/runtime.hpp"

using namespace localsieve;

namespace {

GridFunction clipLog(const Grid& g) {
  return GridFunction::sample(g, [](const Point& x) {
    double rho = std::max(norm2(x), 1e-300);
    return std::min(6.0, -std::log(rho));
  });
}

}  // namespace

TEST_CASE("plain atoms carry exact size normalization and cancellation") {
  Grid g = Grid::make(1, 4.0, 512);
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makeH1Atom(g, ball, 1234, true);
  double m = ballMeasure(g, ball);
  REQUIRE(a.l2Norm == doctest::Approx(1.0 / std::sqrt(m)).epsilon(1e-13));
  REQUIRE(std::abs(a.integral) < 1e-13);
  // The L2-normalized atom is also a (1,2) atom by the size chain.
  Atom retag = a;
  retag.kind = AtomKind::Approximate12;
  REQUIRE(validateAtom(retag).allPassed());
}

TEST_CASE("b-weighted atoms cancel against both 1 and b") {
  Grid g = Grid::make(1, 4.0, 512);
  GridFunction b = clipLog(g);
  Ball ball{{-0.75, 0.0}, 0.125};
  Atom a = makePerezH1bAtom(g, ball, b, 777);
  REQUIRE(std::abs(a.integral) < 1e-12);
  REQUIRE(std::abs(a.bPairing.value()) < 1e-12);
  REQUIRE(validateAtom(a, &b).allPassed());
  // A Perez-style atom is in particular an approximate b-atom.
  Atom retag = a;
  retag.kind = AtomKind::ApproxH1b;
  REQUIRE(validateAtom(retag, &b).allPassed());
}

TEST_CASE("approximate atoms realize their mean budget exactly") {
  Grid g = Grid::make(1, 4.0, 512);
  GridFunction b = clipLog(g);
  Ball ball{{0.25, 0.0}, 0.125};
  double logr = std::log1p(1.0 / ball.radius);
  for (double budget : {0.0, 0.3, 1.0}) {
    Atom a = makeApproxH1bAtom(g, ball, b, 31 + std::uint64_t(budget * 10),
                               budget);
    REQUIRE(std::abs(std::abs(a.integral) - budget / (logr * logr)) < 1e-11);
    REQUIRE(std::abs(a.bPairing.value()) < 1e-11);
    double m = ballMeasure(g, ball);
    REQUIRE(a.l2Norm == doctest::Approx(1.0 / std::sqrt(m)).epsilon(1e-12));
    REQUIRE(validateAtom(a, &b).allPassed());
  }
}

TEST_CASE("large balls need only the size bound") {
  Grid g = Grid::make(1, 4.0, 256);
  GridFunction b = clipLog(g);
  Ball ball{{0.0, 0.0}, 2.0};
  Atom a = makeApproxH1bAtom(g, ball, b, 99, 1.0);
  REQUIRE(validateAtom(a, &b).allPassed());
  // No cancellation is imposed or required at r >= 1.
  AtomCertificate cert = validateAtom(a, &b);
  for (const auto& c : cert.conditions) REQUIRE(c.name != "mean");
}

TEST_CASE("doubling the values breaks the size condition by a factor 2") {
  Grid g = Grid::make(1, 4.0, 512);
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makeH1Atom(g, ball, 555, true);
  a.kind = AtomKind::Approximate12;
  Atom big = a;
  big.values *= 2.0;
  big.l2Norm = lpNorm(big.values, 2.0);
  big.integral = integrate(big.values);
  AtomCertificate cert = validateAtom(big);
  REQUIRE_FALSE(cert.allPassed());
  const AtomCondition& size = cert.at("size_l2");
  REQUIRE_FALSE(size.passed);
  REQUIRE(size.observed / size.bound == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("b-weighted validation demands the symbol") {
  Grid g = Grid::make(1, 4.0, 256);
  GridFunction b = clipLog(g);
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 41);
  REQUIRE_THROWS_AS(validateAtom(a, nullptr), std::invalid_argument);
}

TEST_CASE("compactly supported mean-zero atoms are molecules") {
  Grid g = Grid::make(1, 4.0, 512);
  Ball ball{{0.0, 0.0}, 0.25};
  Atom a = makeH1Atom(g, ball, 4242, true);
  double s = 1.5, lambda = 0.5 + 0.5;
  MoleculeCertificate cert = validateMolecule(a.values, ball, s, lambda);
  REQUIRE(cert.passed);
  REQUIRE(cert.m2.observed == 0.0);  // support inside the ball
  REQUIRE(cert.m3.observed < 1e-12);
  REQUIRE(cert.trendOk);

  GridFunction big = a.values * 10.0;
  MoleculeCertificate bad = validateMolecule(big, ball, s, lambda);
  REQUIRE_FALSE(bad.passed);
  REQUIRE(bad.m1.observed / bad.m1.bound ==
          doctest::Approx(10.0 * cert.m1.observed / cert.m1.bound)
              .epsilon(1e-10));
}

TEST_CASE("decomposition reconstructs exactly with the documented layout") {
  Grid g = Grid::make(1, 8.0, 1024);
  GridFunction b = clipLog(g);
  Ball ball{{0.5, 0.0}, 0.0625};
  Atom a = makeApproxH1bAtom(g, ball, b, 2024, 0.8);
  DecompositionResult dec = decomposeApproxAtom(a, b);

  REQUIRE(dec.alpha == doctest::Approx(a.integral).epsilon(1e-14));
  REQUIRE(dec.k == 4);  // 2^4 * (1/16) = 1
  REQUIRE(dec.atoms.size() == std::size_t(dec.k) + 2);
  REQUIRE(dec.coefficients.front() == 2.0);
  REQUIRE(dec.coefficients.back() == doctest::Approx(dec.alpha));
  REQUIRE(dec.reconstructionError < 1e-13);

  double ell = 0.0;
  for (double c : dec.coefficients) ell += std::abs(c);
  REQUIRE(dec.ellOneSum == doctest::Approx(ell).epsilon(1e-14));
  double logr = std::log1p(1.0 / ball.radius);
  double bound = 3.0 + 2.0 * (std::log2(1.0 / ball.radius) + 1.0) / logr;
  REQUIRE(dec.ellOneBound == doctest::Approx(bound).epsilon(1e-14));
  REQUIRE(dec.ellOneSum <= dec.ellOneBound);

  // Every component is itself a valid approximate atom.
  for (const Atom& comp : dec.atoms)
    REQUIRE(validateAtom(comp, &b).allPassed());

  // Direct reconstruction from the parts.
  GridFunction sum(g);
  for (std::size_t j = 0; j < dec.atoms.size(); ++j)
    sum += dec.atoms[j].values * dec.coefficients[j];
  double maxDiff = 0.0;
  for (std::size_t i = 0; i < g.cellCount(); ++i)
    maxDiff = std::max(maxDiff, std::abs(sum[i] - a.values[i]));
  REQUIRE(maxDiff < 1e-13);
}

TEST_CASE("zero-mean inputs decompose to themselves") {
  Grid g = Grid::make(1, 8.0, 512);
  GridFunction b = clipLog(g);
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makeApproxH1bAtom(g, ball, b, 11, 0.0);
  DecompositionResult dec = decomposeApproxAtom(a, b);
  REQUIRE(dec.atoms.size() == 1);
  REQUIRE(dec.coefficients.front() == 1.0);
  REQUIRE(dec.reconstructionError == 0.0);
  REQUIRE(dec.ellOneSum == 1.0);
}

TEST_CASE("decomposition rejects large balls") {
  Grid g = Grid::make(1, 8.0, 256);
  GridFunction b = clipLog(g);
  Ball ball{{0.0, 0.0}, 1.0};
  Atom a = makeApproxH1bAtom(g, ball, b, 12, 0.5);
  REQUIRE_THROWS_AS(decomposeApproxAtom(a, b), std::invalid_argument);
}

TEST_CASE("cancellation products obey the hoelder chain") {
  Grid g = Grid::make(1, 4.0, 512);
  GridFunction b = clipLog(g);
  Ball ball{{0.5, 0.0}, 0.25};
  Atom a = makePerezH1bAtom(g, ball, b, 61);
  ProductReport rep = abcCancellationProduct(a, b);
  REQUIRE(rep.holderLhs <= rep.holderRhs * (1.0 + 1e-12));
  REQUIRE(rep.ratioS1 > 0.0);
  REQUIRE(rep.normS32 > 0.0);
  REQUIRE(std::isfinite(rep.ratioS32));
}
