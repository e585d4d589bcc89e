#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "localsieve/kernels.hpp"
#include "localsieve/operators.hpp"
#include "localsieve/runtime.hpp"

using namespace localsieve;

namespace {

constexpr double kPi = 3.14159265358979323846;

GridFunction randomPadded(const Grid& g, std::uint64_t seed, double cap) {
  Rng rng(seed);
  GridFunction f(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    Point x = g.point(i);
    if (std::abs(x[0]) <= cap && std::abs(x[1]) <= cap) f[i] = rng.symmetric();
  }
  return f;
}

// Reference truncated sum, written independently of the library loop.
GridFunction naiveTruncated(const std::function<double(const Point&)>& kernel,
                            const GridFunction& f, double eps) {
  const Grid& g = f.grid;
  double hN = std::pow(g.spacing(), g.dim);
  GridFunction out(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    Point xi = g.point(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.cellCount(); ++j) {
      if (f[j] == 0.0) continue;
      Point xj = g.point(j);
      Point d{xi[0] - xj[0], xi[1] - xj[1]};
      if (norm2(d) < eps) continue;
      acc += kernel(d) * f[j];
    }
    out[i] = acc * hN;
  }
  return out;
}

double maxAbsDiff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("applyPV matches the direct truncated sum") {
  Grid g = Grid::make(1, 4.0, 128);
  ConvolutionKernel k = hilbertKernel();
  GridFunction f = randomPadded(g, 311, 1.0);
  GridFunction fast = applyPV(k, f);
  GridFunction slow = naiveTruncated(k.evaluator, f, g.spacing());
  REQUIRE(maxAbsDiff(fast, slow) < 1e-12);

  Grid g2 = Grid::make(2, 2.0, 32);
  ConvolutionKernel rz = rieszKernel(1, 2);
  GridFunction f2 = randomPadded(g2, 313, 0.5);
  REQUIRE(maxAbsDiff(applyPV(rz, f2),
                     naiveTruncated(rz.evaluator, f2, g2.spacing())) < 1e-12);
}

TEST_CASE("explicit truncation below half the spacing is rejected") {
  Grid g = Grid::make(1, 4.0, 64);
  GridFunction f = randomPadded(g, 317, 1.0);
  REQUIRE_THROWS_AS(applyPV(hilbertKernel(), f, g.spacing() / 4.0),
                    std::invalid_argument);
}

TEST_CASE("hilbert transform of the unit indicator matches the closed form") {
  Grid g = Grid::make(1, 8.0, 2048);
  GridFunction f = GridFunction::sample(
      g, [](const Point& x) { return std::abs(x[0]) <= 1.0 ? 1.0 : 0.0; });
  GridFunction tf = applyPV(hilbertKernel(), f);
  auto oracle = [](double x) {
    return (std::log(std::abs(x + 1.0)) - std::log(std::abs(x - 1.0))) / kPi;
  };
  for (double x : {0.0 + 0.5, 3.0, -2.5, 6.0}) {
    int i = int((x + 8.0) / g.spacing());
    double want = oracle(g.point(i)[0]);
    REQUIRE(tf[i] == doctest::Approx(want).epsilon(0.02));
  }
}

TEST_CASE("applyLocalized matches the windowed direct sum") {
  Grid g = Grid::make(1, 4.0, 128);
  ConvolutionKernel k = hilbertKernel();
  Localizer eta = standardBumpEta(1);
  GridFunction f = randomPadded(g, 331, 1.0);
  auto windowed = [&](const Point& d) {
    return k.evaluator(d) * eta.evaluator(d);
  };
  REQUIRE(maxAbsDiff(applyLocalized(k, eta, f),
                     naiveTruncated(windowed, f, g.spacing())) < 1e-12);
}

TEST_CASE("convolveLocalizer matches the direct convolution sum") {
  Grid g = Grid::make(1, 4.0, 128);
  Localizer psi = gaussianPsi(1);
  GridFunction f = randomPadded(g, 337, 0.9);
  double hN = g.spacing();
  GridFunction direct(g);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.cellCount(); ++j) {
      Point d{g.point(i)[0] - g.point(j)[0], 0.0};
      acc += psi.evaluator(d) * f[j];
    }
    direct[i] = acc * hN;
  }
  REQUIRE(maxAbsDiff(convolveLocalizer(psi, f), direct) < 1e-10);
}

TEST_CASE("fourier localization equals subtracting the mollified part") {
  Grid g = Grid::make(1, 8.0, 256);
  ConvolutionKernel k = hilbertKernel();
  Localizer psi = gaussianPsi(1);
  GridFunction f = randomPadded(g, 347, 1.5);
  GridFunction viaOps = applyPV(k, f - convolveLocalizer(psi, f));
  GridFunction direct = applyFourierLocalized(k, psi, f);
  REQUIRE(maxAbsDiff(direct, viaOps) < 1e-8);
}

TEST_CASE("the error kernel is summable with decaying shell masses") {
  Grid g = Grid::make(1, 32.0, 1024);
  ErrorKernelResult err =
      errorKernelStar(hilbertKernel(), standardBumpEta(1), gaussianPsi(1), g);
  REQUIRE(err.l1Norm > 0.0);
  REQUIRE(err.l1Norm == doctest::Approx(lpNorm(err.kStar, 1.0)));
  REQUIRE(err.shellProfile.size() >= 5);
  REQUIRE(err.tailDecays());
  REQUIRE_FALSE(err.epsList.empty());
  // Cumulative shell masses are nondecreasing and bounded by the total.
  double prev = 0.0;
  for (const auto& [radius, mass] : err.shellProfile) {
    REQUIRE(mass >= prev - 1e-15);
    REQUIRE(mass <= err.l1Norm * (1.0 + 1e-12));
    prev = mass;
  }
}

TEST_CASE("adjoint pairing identity") {
  Grid g = Grid::make(1, 4.0, 128);
  ConvolutionKernel k = hilbertKernel();
  GridFunction f = randomPadded(g, 353, 1.0);
  GridFunction w = randomPadded(g, 359, 1.0);
  double h = g.spacing();
  GridFunction tf = applyPV(k, f);
  GridFunction tw = adjointApply(k, w);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    lhs += tf[i] * w[i] * h;
    rhs += f[i] * tw[i] * h;
  }
  REQUIRE(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
}

TEST_CASE("frequency-side local riesz transform") {
  Grid g = Grid::make(1, 8.0, 512);
  double xi1 = kPi / 8.0;  // lowest nonzero frequency of the box
  auto phi = [xi1](const Point& xi) {
    return std::abs(xi[0]) <= 2.5 * xi1 ? 1.0 : 0.0;
  };
  GridFunction f = GridFunction::sample(g, [](const Point& x) {
    double w = 1.0 - x[0] * x[0];
    return w > 0.0 ? std::sin(24.0 * x[0]) * w * w : 0.0;
  });
  GridFunction rf = localRieszGoldberg(1, phi, f);
  // The multiplier has modulus at most 1: Plancherel gives an L2 contraction.
  REQUIRE(lpNorm(rf, 2.0) <= lpNorm(f, 2.0) * (1.0 + 1e-12));
  // Skew symmetry of the multiplier.
  GridFunction w2 = GridFunction::sample(g, [](const Point& x) {
    double w = 1.0 - (x[0] - 0.25) * (x[0] - 0.25);
    return w > 0.0 ? std::cos(19.0 * x[0]) * w * w : 0.0;
  });
  GridFunction rw = localRieszGoldberg(1, phi, w2);
  double h = g.spacing();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    lhs += rf[i] * w2[i] * h;
    rhs += f[i] * rw[i] * h;
  }
  REQUIRE(std::abs(lhs + rhs) < 1e-8 * (1.0 + std::abs(lhs)));
  // A cutoff that misses the lowest nonzero frequencies is rejected.
  auto badPhi = [](const Point&) { return 0.0; };
  REQUIRE_THROWS_AS(localRieszGoldberg(1, badPhi, f), std::invalid_argument);
}
