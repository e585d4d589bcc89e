#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "localsieve/grid.hpp"

using namespace localsieve;

namespace {
constexpr double kPi = 3.14159265358979323846;
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("cell centers avoid the origin and tile the box") {
  Grid g = Grid::make(1, 8.0, 64);
  REQUIRE(g.spacing() == 0.25);
  REQUIRE(g.cellCount() == 64);
  for (std::size_t i = 0; i < g.cellCount(); ++i)
    REQUIRE(std::abs(g.point(i)[0]) >= g.spacing() / 2.0 - 1e-15);
  REQUIRE(g.coord(0) == -8.0 + 0.125);
  REQUIRE(g.coord(63) == doctest::Approx(8.0 - 0.125));

  Grid g2 = Grid::make(2, 4.0, 16);
  REQUIRE(g2.cellCount() == 256);
  // Row-major flattening.
  REQUIRE(g2.point(16)[0] == doctest::Approx(g2.coord(1)));
  REQUIRE(g2.point(16)[1] == doctest::Approx(g2.coord(0)));
}

TEST_CASE("midpoint quadrature integrates a gaussian to its closed form") {
  Grid g = Grid::make(1, 8.0, 1024);
  GridFunction f = GridFunction::sample(
      g, [](const Point& x) { return std::exp(-0.5 * x[0] * x[0]); });
  REQUIRE(integrate(f) ==
          doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-6));

  Grid g2 = Grid::make(2, 6.0, 256);
  GridFunction f2 = GridFunction::sample(g2, [](const Point& x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
  });
  REQUIRE(integrate(f2) == doctest::Approx(2.0 * kPi).epsilon(1e-6));
}

TEST_CASE("lp norms agree with closed forms and split across regions") {
  Grid g = Grid::make(1, 4.0, 512);
  GridFunction f = GridFunction::sample(
      g, [](const Point& x) { return std::abs(x[0]) <= 2.0 ? 3.0 : 0.0; });
  REQUIRE(lpNorm(f, 1.0) == doctest::Approx(12.0).epsilon(1e-12));
  REQUIRE(lpNorm(f, 2.0) == doctest::Approx(6.0).epsilon(1e-12));
  REQUIRE(lpNorm(f, kInf) == 3.0);

  Ball ball{{0.0, 0.0}, 1.0};
  double inside = lpNorm(f, 1.0, ball, Region::Inside);
  double outside = lpNorm(f, 1.0, ball, Region::Outside);
  REQUIRE(inside + outside == doctest::Approx(lpNorm(f, 1.0)).epsilon(1e-13));
  REQUIRE(inside == doctest::Approx(6.0).epsilon(1e-2));
}

TEST_CASE("ball cells, measure, and localized reference value") {
  Grid g = Grid::make(1, 4.0, 256);
  Ball small{{0.5, 0.0}, 0.25};
  auto cells = cellsInBall(g, small);
  std::size_t direct = 0;
  for (std::size_t i = 0; i < g.cellCount(); ++i)
    if (std::abs(g.point(i)[0] - 0.5) <= 0.25) ++direct;
  REQUIRE(cells.size() == direct);
  REQUIRE(ballMeasure(g, small) ==
          doctest::Approx(double(direct) * g.spacing()).epsilon(1e-15));

  GridFunction b = GridFunction::sample(
      g, [](const Point& x) { return x[0] * x[0]; });
  double mean = 0.0;
  for (auto c : cells) mean += b[c];
  mean /= double(cells.size());
  REQUIRE(cBall(b, small) == doctest::Approx(mean).epsilon(1e-15));
  Ball large{{0.5, 0.0}, 1.0};
  REQUIRE(cBall(b, large) == 0.0);  // r >= 1 branch

  Ball empty{{0.5, 0.0}, 1e-6};
  REQUIRE_THROWS(ballMean(b, empty));
  REQUIRE(ballInsideBox(g, small));
  REQUIRE_FALSE(ballInsideBox(g, Ball{{3.9, 0.0}, 0.5}));
}

TEST_CASE("grid function arithmetic requires matching grids") {
  Grid g = Grid::make(1, 2.0, 16);
  GridFunction a = GridFunction::sample(g, [](const Point& x) { return x[0]; });
  GridFunction b = GridFunction::sample(g, [](const Point&) { return 2.0; });
  GridFunction sum = a + b;
  REQUIRE(sum[3] == doctest::Approx(a[3] + 2.0));
  GridFunction prod = hadamard(a, b);
  REQUIRE(prod[5] == doctest::Approx(2.0 * a[5]));
  GridFunction scaled = a * 3.0;
  REQUIRE(scaled[7] == doctest::Approx(3.0 * a[7]));

  Grid other = Grid::make(1, 2.0, 32);
  GridFunction c(other);
  REQUIRE_THROWS_AS((void)(a + c), std::invalid_argument);
}

TEST_CASE("gfn files round-trip bitwise") {
  Grid g = Grid::make(2, 2.0, 16);
  GridFunction f = GridFunction::sample(g, [](const Point& x) {
    return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
  });
  const char* path = "roundtrip_test.gfn";
  writeGfn(path, f);
  GridFunction back = readGfn(path);
  REQUIRE(back.grid == g);
  REQUIRE(back.values == f.values);
  std::remove(path);
}

TEST_CASE("fourier multiplier differentiates grid modes exactly") {
  Grid g = Grid::make(1, 4.0, 128);
  double w = 2.0 * kPi / 8.0 * 3.0;  // third positive mode of the box
  GridFunction f = GridFunction::sample(
      g, [&](const Point& x) { return std::sin(w * x[0]); });
  GridFunction df = fourierMultiply(f, [](const Point& xi) {
    return std::complex<double>(0.0, xi[0]);
  });
  for (std::size_t i = 0; i < g.cellCount(); i += 7)
    REQUIRE(df[i] ==
            doctest::Approx(w * std::cos(w * g.point(i)[0])).epsilon(1e-10));
}

TEST_CASE("padding contract rejects wide supports") {
  Grid g = Grid::make(1, 4.0, 64);
  GridFunction narrow = GridFunction::sample(
      g, [](const Point& x) { return std::abs(x[0]) <= 0.9 ? 1.0 : 0.0; });
  REQUIRE(supportHalfWidth(narrow) <= 1.0);
  REQUIRE_NOTHROW(requirePaddingContract(narrow));
  GridFunction wide = GridFunction::sample(
      g, [](const Point& x) { return std::abs(x[0]) <= 3.5 ? 1.0 : 0.0; });
  REQUIRE_THROWS_AS(requirePaddingContract(wide), std::invalid_argument);
}

TEST_CASE("restrictToBall zeroes the complement") {
  Grid g = Grid::make(1, 2.0, 64);
  GridFunction f = GridFunction::sample(g, [](const Point&) { return 1.0; });
  Ball ball{{0.0, 0.0}, 0.5};
  GridFunction r = restrictToBall(f, ball);
  for (std::size_t i = 0; i < g.cellCount(); ++i) {
    bool in = std::abs(g.point(i)[0]) <= 0.5;
    REQUIRE(r[i] == (in ? 1.0 : 0.0));
  }
}

TEST_CASE("tail shell witness separates converged from flat tails") {
  using Shells = std::vector<std::pair<double, double>>;
  auto shells = [](std::initializer_list<double> masses) {
    Shells s;
    double edge = 1.0;
    for (double m : masses) s.emplace_back(edge *= 2.0, m);
    return s;
  };

  REQUIRE(tailShellsConverged(Shells{}));
  // A dead tail converges regardless of interior humps.
  REQUIRE(tailShellsConverged(shells({0.0, 0.0, 1e-3, 2e-4, 0.0, 0.0})));
  REQUIRE(tailShellsConverged(shells({1e-3, 5e-3, 0.0})));
  REQUIRE(tailShellsConverged(shells({0.0, 0.0, 0.0})));
  // A live tail must fall geometrically over the closing window.
  REQUIRE(tailShellsConverged(shells({2.0, 4.0, 3.0, 1.5, 0.7})));
  REQUIRE_FALSE(tailShellsConverged(shells({1.0, 1.0, 1.0, 1.0, 1.0})));
  REQUIRE_FALSE(tailShellsConverged(shells({0.1, 0.2, 0.4, 0.8, 1.6})));
  // The truncated final annulus alone cannot certify: the pair before it
  // still holds a flat tail at ratio one.
  REQUIRE_FALSE(tailShellsConverged(shells({1.0, 1.0, 1.0, 0.2})));
  // Post-hump log-squared decay starts near 0.903 and must be admitted.
  REQUIRE(tailShellsConverged(shells({4.04, 3.65, 2.88})));
  // Mass reappearing at the box edge after a dead annulus is not decay.
  REQUIRE_FALSE(tailShellsConverged(shells({1.0, 0.5, 0.0, 0.3})));
}
