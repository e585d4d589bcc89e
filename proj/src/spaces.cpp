#include "localsieve/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "localsieve/runtime.hpp"

namespace localsieve {

BallFamily BallFamily::standard(const Grid& g, int stride, double maxRadius) {
  if (stride < 1) throw std::invalid_argument("BallFamily: stride must be >= 1");
  if (maxRadius <= 0.0) maxRadius = 0.5 * g.halfWidth;
  BallFamily f;
  const int n = g.pointsPerAxis;
  if (g.dim == 1) {
    for (int i = 0; i < n; i += stride) f.centers.push_back({g.coord(i), 0.0});
  } else {
    for (int i = 0; i < n; i += stride)
      for (int j = 0; j < n; j += stride)
        f.centers.push_back({g.coord(i), g.coord(j)});
  }
  for (double r = 4.0 * g.spacing(); r <= maxRadius; r *= 2.0)
    f.radii.push_back(r);
  if (f.radii.empty())
    throw std::invalid_argument("BallFamily: box too small for any radius");
  return f;
}

BallFamily BallFamily::fromLists(std::vector<Point> centers,
                                 std::vector<double> radii) {
  BallFamily f;
  f.centers = std::move(centers);
  f.radii = std::move(radii);
  return f;
}

std::vector<Ball> BallFamily::balls(const Grid& g) const {
  std::vector<Ball> out;
  for (const Point& c : centers)
    for (double r : radii) {
      Ball b{c, r};
      if (ballInsideBox(g, b)) out.push_back(b);
    }
  return out;
}

namespace {

struct BallMoments {
  double p1 = 0.0, p2 = 0.0, p6 = 0.0;  // means of |d|, |d|^2, |d|^6
};

BallMoments momentsOver(const GridFunction& b,
                        const std::vector<std::size_t>& cells, double ref) {
  BallMoments m;
  for (std::size_t c : cells) {
    double d = std::abs(b.values[c] - ref);
    double d2 = d * d;
    m.p1 += d;
    m.p2 += d2;
    m.p6 += d2 * d2 * d2;
  }
  double inv = 1.0 / double(cells.size());
  m.p1 *= inv;
  m.p2 *= inv;
  m.p6 *= inv;
  return m;
}

void keepMax(std::map<std::string, Ball>& argmax, std::map<int, double>& best,
             const std::string& key, int p, double value, const Ball& ball) {
  auto it = best.find(p);
  if (it == best.end() || value > it->second) {
    best[p] = value;
    argmax[key] = ball;
  }
}

}  // namespace

OscillationReport oscillationReport(const GridFunction& b, const BallFamily& f) {
  OscillationReport rep;
  for (int p : {1, 2, 6}) rep.bmoP[p] = 0.0;
  for (int p : {1, 2}) {
    rep.bmolocP[p] = 0.0;
    rep.lmolocP[p] = 0.0;
  }
  std::map<int, double> bmoBest, bmolocBest, lmolocBest;
  for (const Ball& ball : f.balls(b.grid)) {
    auto cells = cellsInBall(b.grid, ball);
    if (cells.empty()) continue;
    const bool small = ball.radius < 1.0;
    double ref = 0.0;
    if (small) {
      for (std::size_t c : cells) ref += b.values[c];
      ref /= double(cells.size());
    }
    BallMoments m = momentsOver(b, cells, ref);
    double v1 = m.p1;
    double v2 = std::sqrt(m.p2);
    double v6 = std::pow(m.p6, 1.0 / 6.0);
    keepMax(rep.argmax, bmoBest, "bmo_p1", 1, v1, ball);
    keepMax(rep.argmax, bmoBest, "bmo_p2", 2, v2, ball);
    keepMax(rep.argmax, bmoBest, "bmo_p6", 6, v6, ball);
    if (small) {
      rep.smallBallCount++;
      rep.smallBallSup = std::max(rep.smallBallSup, v1);
      keepMax(rep.argmax, bmolocBest, "bmoloc_p1", 1, v1, ball);
      keepMax(rep.argmax, bmolocBest, "bmoloc_p2", 2, v2, ball);
      double w = std::log1p(1.0 / ball.radius);
      keepMax(rep.argmax, lmolocBest, "lmoloc_p1", 1, w * v1, ball);
      keepMax(rep.argmax, lmolocBest, "lmoloc_p2", 2, w * v2, ball);
    } else {
      rep.largeBallCount++;
      if (v1 > rep.largeBallSup) {
        rep.largeBallSup = v1;
        rep.argmax["large_avg"] = ball;
      }
    }
  }
  for (auto& [p, v] : rep.bmoP) v = bmoBest.count(p) ? bmoBest[p] : 0.0;
  for (auto& [p, v] : rep.bmolocP) v = bmolocBest.count(p) ? bmolocBest[p] : 0.0;
  for (auto& [p, v] : rep.lmolocP) v = lmolocBest.count(p) ? lmolocBest[p] : 0.0;
  return rep;
}

OscillationReport bmoNorm(const GridFunction& b, const BallFamily& f, int p) {
  if (p != 1 && p != 2 && p != 6)
    throw std::invalid_argument("bmoNorm: supported exponents are 1, 2, 6");
  return oscillationReport(b, f);
}

OscillationReport lmoNorms(const GridFunction& b, const BallFamily& f) {
  return oscillationReport(b, f);
}

double bmoNormValue(const GridFunction& b, const BallFamily& f, int p) {
  return bmoNorm(b, f, p).bmoP.at(p);
}

BallCommutatorContext makeBallCommutatorContext(const GridFunction& b,
                                                const BallFamily& f) {
  BallCommutatorContext ctx;
  ctx.grid = b.grid;
  ctx.bValues = b.values;
  auto balls = f.balls(b.grid);
  ctx.data.resize(balls.size());
  parallelFor(balls.size(), [&](std::size_t k) {
    auto cells = cellsInBall(b.grid, balls[k]);
    std::sort(cells.begin(), cells.end(),
              [&](std::size_t u, std::size_t v) {
                return b.values[u] < b.values[v] ||
                       (b.values[u] == b.values[v] && u < v);
              });
    auto& d = ctx.data[k];
    d.cells = std::move(cells);
    d.sortedB.resize(d.cells.size());
    for (std::size_t q = 0; q < d.cells.size(); ++q)
      d.sortedB[q] = b.values[d.cells[q]];
  });
  return ctx;
}

GridFunction ballCommutatorMaximal(const BallCommutatorContext& ctx,
                                   const GridFunction& f) {
  requireSameGrid(ctx.grid, f.grid);
  GridFunction out(f.grid);
  // Per-ball candidate means; balls are processed serially into `out`
  // after the parallel stage so the result is order-independent.
  std::vector<std::vector<double>> cand(ctx.data.size());
  parallelFor(ctx.data.size(), [&](std::size_t k) {
    const auto& d = ctx.data[k];
    const std::size_t m = d.cells.size();
    if (m == 0) return;
    std::vector<double> w(m), wb(m);
    double wTot = 0.0, wbTot = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      double a = std::abs(f.values[d.cells[q]]);
      w[q] = a;
      wb[q] = a * d.sortedB[q];
    }
    // prefix sums: sums of w and w*b over sorted positions < q
    std::vector<double> pw(m + 1, 0.0), pwb(m + 1, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      pw[q + 1] = pw[q] + w[q];
      pwb[q + 1] = pwb[q] + wb[q];
    }
    wTot = pw[m];
    wbTot = pwb[m];
    auto& c = cand[k];
    c.resize(m);
    for (std::size_t q = 0; q < m; ++q) {
      double bx = d.sortedB[q];
      // sum |b(x)-b(y)| w(y) splits at the sorted position; ties land on
      // either side with zero contribution.
      double below = bx * pw[q] - pwb[q];
      double above = (wbTot - pwb[q]) - bx * (wTot - pw[q]);
      c[q] = (below + above) / double(m);
    }
  });
  for (std::size_t k = 0; k < ctx.data.size(); ++k) {
    const auto& d = ctx.data[k];
    for (std::size_t q = 0; q < d.cells.size(); ++q) {
      double v = cand[k][q];
      if (v > out.values[d.cells[q]]) out.values[d.cells[q]] = v;
    }
  }
  return out;
}

GridFunction ballCommutatorMaximal(const GridFunction& b,
                                   const GridFunction& f,
                                   const BallFamily& fam) {
  requireSameGrid(b.grid, f.grid);
  return ballCommutatorMaximal(makeBallCommutatorContext(b, fam), f);
}

GridFunction hardyLittlewoodMaximal(const GridFunction& f,
                                    const BallFamily& fam) {
  GridFunction out(f.grid);
  for (const Ball& ball : fam.balls(f.grid)) {
    auto cells = cellsInBall(f.grid, ball);
    if (cells.empty()) continue;
    double s = 0.0;
    for (std::size_t c : cells) s += std::abs(f.values[c]);
    double mean = s / double(cells.size());
    for (std::size_t c : cells)
      if (mean > out.values[c]) out.values[c] = mean;
  }
  return out;
}

namespace {

TestProfile flatTopProfile(int dim) {
  TestProfile p;
  p.name = "flat-top";
  p.maxAbs = 1.0;
  p.gradBound = M_PI;
  p.shape = [dim](const Point& u) {
    double rho = dim == 1 ? std::abs(u[0]) : norm2(u);
    if (rho >= 1.0) return 0.0;
    if (rho <= 0.5) return 1.0;
    double c = std::cos(M_PI * (rho - 0.5));
    return c * c;
  };
  return p;
}

TestProfile coneProfile(int dim) {
  TestProfile p;
  p.name = "cone";
  p.maxAbs = 1.0;
  p.gradBound = 1.0;
  p.shape = [dim](const Point& u) {
    double rho = dim == 1 ? std::abs(u[0]) : norm2(u);
    return rho >= 1.0 ? 0.0 : 1.0 - rho;
  };
  return p;
}

TestProfile signFlipProfile(int dim) {
  TestProfile p;
  p.name = "sign-flip";
  // max of |u1| (1 - |u|^2)^2 at |u| = 1/sqrt(5); gradient peaks at 1.
  p.maxAbs = 0.28621670111997307;
  p.gradBound = 1.0;
  p.shape = [dim](const Point& u) {
    double r2 = dim == 1 ? u[0] * u[0] : u[0] * u[0] + u[1] * u[1];
    if (r2 >= 1.0) return 0.0;
    double q = 1.0 - r2;
    return u[0] * q * q;
  };
  return p;
}

void verifyProfile(const TestProfile& p, int dim) {
  // Sampled confirmation of the declared sup bound on a fixed lattice.
  const int n = 41;
  double seen = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < (dim == 1 ? 1 : n); ++j) {
      Point u{-1.0 + 2.0 * i / (n - 1), dim == 1 ? 0.0 : -1.0 + 2.0 * j / (n - 1)};
      seen = std::max(seen, std::abs(p.shape(u)));
    }
  if (seen > p.maxAbs * (1.0 + 1e-12))
    throw std::logic_error("test profile exceeds its declared bound: " + p.name);
}

}  // namespace

TestDictionary TestDictionary::standard(const Grid& g, int stride,
                                        int maxScales) {
  TestDictionary d;
  d.stride = stride;
  d.profiles = {flatTopProfile(g.dim), coneProfile(g.dim), signFlipProfile(g.dim)};
  for (const TestProfile& p : d.profiles) verifyProfile(p, g.dim);
  for (double t = 0.5; t > g.spacing() && int(d.scales.size()) < maxScales;
       t *= 0.5)
    d.scales.push_back(t);
  if (d.scales.empty())
    throw std::invalid_argument("TestDictionary: no admissible scale");
  return d;
}

namespace {

// Shared sweep for the dictionary lower bounds. For each anchor and scale
// the two integrals int f phi and int b f phi are accumulated once; the
// commutator pairing is b(x) I1 - I2 and the plain pairing is I1.
GridFunction dictionarySweep(const GridFunction* b, const GridFunction& f,
                             const TestDictionary& d) {
  const Grid& g = f.grid;
  GridFunction out(g);
  const double h = g.spacing();
  const double cellVol = g.dim == 1 ? h : h * h;
  std::vector<std::size_t> anchors;
  const int n = g.pointsPerAxis;
  if (g.dim == 1) {
    for (int i = 0; i < n; i += d.stride) anchors.push_back(std::size_t(i));
  } else {
    for (int i = 0; i < n; i += d.stride)
      for (int j = 0; j < n; j += d.stride)
        anchors.push_back(std::size_t(i) * n + j);
  }
  parallelFor(anchors.size(), [&](std::size_t ai) {
    std::size_t cellIx = anchors[ai];
    Point x = g.point(cellIx);
    double best = 0.0;
    for (double t : d.scales) {
      Ball support{x, t};
      if (!ballInsideBox(g, support)) continue;
      auto cells = cellsInBall(g, support);
      if (cells.empty()) continue;
      double measure = double(cells.size()) * cellVol;
      for (const TestProfile& p : d.profiles) {
        double amp = std::min(1.0 / p.maxAbs, 1.0 / p.gradBound) / measure;
        double i1 = 0.0, i2 = 0.0;
        for (std::size_t c : cells) {
          Point y = g.point(c);
          double shape =
              p.shape(Point{(y[0] - x[0]) / t, (y[1] - x[1]) / t});
          if (shape == 0.0) continue;
          double fv = f.values[c] * shape;
          i1 += fv;
          if (b) i2 += fv * b->values[c];
        }
        i1 *= amp * cellVol;
        i2 *= amp * cellVol;
        double value =
            b ? std::abs(b->values[cellIx] * i1 - i2) : std::abs(i1);
        best = std::max(best, value);
      }
    }
    out.values[cellIx] = best;
  });
  return out;
}

}  // namespace

GridFunction commutatorMaximalLower(const GridFunction& b,
                                    const GridFunction& f,
                                    const TestDictionary& d) {
  requireSameGrid(b.grid, f.grid);
  return dictionarySweep(&b, f, d);
}

GridFunction grandMaximalLower(const GridFunction& f, const TestDictionary& d) {
  return dictionarySweep(nullptr, f, d);
}

double subgridL1(const GridFunction& f, int stride) {
  const Grid& g = f.grid;
  const int n = g.pointsPerAxis;
  double s = 0.0;
  if (g.dim == 1) {
    for (int i = 0; i < n; i += stride) s += std::abs(f.values[std::size_t(i)]);
    return s * g.spacing() * stride;
  }
  for (int i = 0; i < n; i += stride)
    for (int j = 0; j < n; j += stride)
      s += std::abs(f.values[std::size_t(i) * n + j]);
  double hs = g.spacing() * stride;
  return s * hs * hs;
}

double h1NormEstimate(const GridFunction& f,
                      const std::function<double(const Point&)>& profile,
                      const std::vector<double>& scales) {
  if (scales.empty()) throw std::invalid_argument("h1NormEstimate: no scales");
  const Grid& g = f.grid;
  GridFunction maxConv(g);
  const double h = g.spacing();
  const double cellVol = g.dim == 1 ? h : h * h;
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] != 0.0) nz.push_back(i);
  for (double t : scales) {
    const double invT = 1.0 / t;
    const double scaleNorm = g.dim == 1 ? invT : invT * invT;
    parallelFor(g.cellCount(), [&](std::size_t i) {
      Point x = g.point(i);
      double acc = 0.0;
      for (std::size_t j : nz) {
        Point y = g.point(j);
        double dx0 = (x[0] - y[0]) * invT, dx1 = (x[1] - y[1]) * invT;
        if (std::abs(dx0) >= 1.0 || std::abs(dx1) >= 1.0) continue;
        double s = profile(Point{dx0, dx1});
        if (s != 0.0) acc += s * f.values[j];
      }
      double v = std::abs(acc) * scaleNorm * cellVol;
      if (v > maxConv.values[i]) maxConv.values[i] = v;
    });
  }
  return lpNorm(maxConv, 1.0);
}

namespace {

double bumpProfileRaw(const Point& u, int dim) {
  double r2 = dim == 1 ? u[0] * u[0] : u[0] * u[0] + u[1] * u[1];
  if (r2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r2));
}

// Unit-integral normalization of the smooth bump, computed once per dim.
double bumpProfileMass(int dim) {
  static double cache[3] = {0.0, 0.0, 0.0};
  if (cache[dim] != 0.0) return cache[dim];
  const int n = 4001;
  double s = 0.0;
  double step = 2.0 / (n - 1);
  if (dim == 1) {
    for (int i = 0; i < n - 1; ++i) {
      double u = -1.0 + (i + 0.5) * step;
      s += bumpProfileRaw(Point{u, 0.0}, 1) * step;
    }
  } else {
    const int m = 801;
    double st = 2.0 / (m - 1);
    for (int i = 0; i < m - 1; ++i)
      for (int j = 0; j < m - 1; ++j) {
        Point u{-1.0 + (i + 0.5) * st, -1.0 + (j + 0.5) * st};
        s += bumpProfileRaw(u, 2) * st * st;
      }
  }
  cache[dim] = s;
  return s;
}

}  // namespace

std::vector<double> defaultScales(const Grid& g, int maxScales) {
  std::vector<double> scales;
  for (double t = 0.5; t > g.spacing() && int(scales.size()) < maxScales;
       t *= 0.5)
    scales.push_back(t);
  if (scales.empty())
    throw std::invalid_argument("defaultScales: spacing too coarse");
  return scales;
}

double h1NormEstimateDefault(const GridFunction& f) {
  const int dim = f.grid.dim;
  const double mass = bumpProfileMass(dim);
  auto profile = [dim, mass](const Point& u) {
    return bumpProfileRaw(u, dim) / mass;
  };
  return h1NormEstimate(f, profile, defaultScales(f.grid));
}

double meanBoundRatio(const GridFunction& g, const Ball& ball) {
  const double r2 = ball.radius * ball.radius;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (g.values[i] == 0.0) continue;
    Point x = g.grid.point(i);
    double d0 = x[0] - ball.center[0], d1 = x[1] - ball.center[1];
    if (d0 * d0 + d1 * d1 > r2)
      throw std::invalid_argument("meanBoundRatio: support leaves the ball");
  }
  double num = std::abs(integrate(g)) * std::log1p(1.0 / ball.radius);
  double den = h1NormEstimateDefault(g);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    throw std::runtime_error(
        "meanBoundRatio: zero norm estimate with nonzero mean");
  }
  return num / den;
}

TailRatioReport weightedTailRatio(const GridFunction& b, const Ball& ball,
                                  double delta, double p,
                                  const BallFamily* family) {
  const Grid& g = b.grid;
  const double cB = cBall(b, ball);
  const double h = g.spacing();
  const double cellVol = g.dim == 1 ? h : h * h;
  const double r = ball.radius;

  double corner = g.halfWidth * (g.dim == 1 ? 1.0 : std::sqrt(2.0)) +
                  std::max(std::abs(ball.center[0]), std::abs(ball.center[1]));
  std::vector<double> edges{r};
  while (edges.back() < corner) edges.push_back(2.0 * edges.back());

  std::vector<double> mass(edges.size(), 0.0);
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    Point x = g.point(i);
    double dist = std::sqrt((x[0] - ball.center[0]) * (x[0] - ball.center[0]) +
                            (x[1] - ball.center[1]) * (x[1] - ball.center[1]));
    if (dist <= r) continue;
    double term = std::pow(std::abs(b.values[i] - cB), p) /
                  std::pow(dist, double(g.dim) + delta);
    std::size_t shell = 1;
    while (shell < edges.size() && dist > edges[shell]) ++shell;
    mass[std::min(shell, mass.size() - 1)] += term * cellVol;
  }

  TailRatioReport rep;
  double total = 0.0;
  for (std::size_t s = 1; s < edges.size(); ++s) {
    total += mass[s];
    rep.shells.emplace_back(edges[s], mass[s]);
  }
  // Masses may hump where |b - c_B| grows before the weight wins; only the
  // closing annuli witness whether the tail integral converged in the box.
  rep.trendOk = tailShellsConverged(rep.shells);

  double numerator = std::pow(r, delta) * total;
  BallFamily def;
  const BallFamily* fam = family;
  if (!fam) {
    def = BallFamily::standard(g);
    fam = &def;
  }
  double norm = bmoNormValue(b, *fam, 1);
  if (norm == 0.0) {
    if (numerator == 0.0) {
      rep.ratio = 0.0;
      return rep;
    }
    throw std::runtime_error(
        "weightedTailRatio: zero oscillation norm with nonzero tail");
  }
  rep.ratio = numerator / std::pow(norm, p);
  return rep;
}

}  // namespace localsieve
