#include "localsieve/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "localsieve/runtime.hpp"

namespace localsieve {

namespace {

double resolveEps(const Grid& g, double eps) {
  if (eps <= 0.0) return g.spacing();
  if (eps < 0.5 * g.spacing())
    throw std::invalid_argument("truncation below h/2 is not resolved");
  return eps;
}

std::vector<std::size_t> nonzeroCells(const GridFunction& f) {
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] != 0.0) nz.push_back(i);
  return nz;
}

// Difference table D[d + N - 1] = fn((d) * h) masked by |d h| >= eps;
// kernel sums become correlations over it.
std::vector<double> differenceTable1d(
    const std::function<double(const Point&)>& fn, const Grid& g, double eps) {
  const int n = g.pointsPerAxis;
  const double h = g.spacing();
  std::vector<double> table(std::size_t(2 * n - 1), 0.0);
  for (int d = -(n - 1); d <= n - 1; ++d) {
    double dist = std::abs(double(d)) * h;
    if (dist >= eps) table[std::size_t(d + n - 1)] = fn(Point{d * h, 0.0});
  }
  return table;
}

std::vector<double> differenceTable2d(
    const std::function<double(const Point&)>& fn, const Grid& g, double eps) {
  const int n = g.pointsPerAxis;
  const double h = g.spacing();
  const std::size_t w = std::size_t(2 * n - 1);
  std::vector<double> table(w * w, 0.0);
  for (int d0 = -(n - 1); d0 <= n - 1; ++d0)
    for (int d1 = -(n - 1); d1 <= n - 1; ++d1) {
      double dist = std::hypot(d0 * h, d1 * h);
      if (dist >= eps)
        table[std::size_t(d0 + n - 1) * w + std::size_t(d1 + n - 1)] =
            fn(Point{d0 * h, d1 * h});
    }
  return table;
}

GridFunction correlate(const std::function<double(const Point&)>& fn,
                       const GridFunction& f, double eps) {
  const Grid& g = f.grid;
  const int n = g.pointsPerAxis;
  const double h = g.spacing();
  GridFunction out(g);
  auto nz = nonzeroCells(f);
  if (g.dim == 1) {
    std::vector<double> table = differenceTable1d(fn, g, eps);
    parallelFor(std::size_t(n), [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t j : nz)
        acc += table[i - j + std::size_t(n) - 1] * f.values[j];
      out.values[i] = acc * h;
    });
    return out;
  }
  std::vector<double> table = differenceTable2d(fn, g, eps);
  const std::size_t w = std::size_t(2 * n - 1);
  parallelFor(g.cellCount(), [&](std::size_t i) {
    const std::size_t i0 = i / std::size_t(n), i1 = i % std::size_t(n);
    double acc = 0.0;
    for (std::size_t j : nz) {
      const std::size_t j0 = j / std::size_t(n), j1 = j % std::size_t(n);
      acc += table[(i0 - j0 + std::size_t(n) - 1) * w +
                   (i1 - j1 + std::size_t(n) - 1)] *
             f.values[j];
    }
    out.values[i] = acc * h * h;
  });
  return out;
}

}  // namespace

GridFunction applyPV(const ConvolutionKernel& k, const GridFunction& f,
                     double eps) {
  if (k.dim != f.grid.dim)
    throw std::invalid_argument("applyPV: kernel/grid dimension mismatch");
  return correlate(k.evaluator, f, resolveEps(f.grid, eps));
}

GridFunction applyLocalized(const ConvolutionKernel& k, const Localizer& eta,
                            const GridFunction& f, double eps) {
  return applyPV(productKernel(k, eta), f, eps);
}

GridFunction convolveLocalizer(const Localizer& psi, const GridFunction& f) {
  if (psi.dim != f.grid.dim)
    throw std::invalid_argument("convolveLocalizer: dimension mismatch");
  // No truncation: table masked only by the impossible eps = 0 bound.
  GridFunction out = correlate(psi.evaluator, f, 0.0);
  return out;
}

GridFunction applyFourierLocalized(const ConvolutionKernel& k,
                                   const Localizer& psi, const GridFunction& f,
                                   double eps) {
  requirePaddingContract(f);
  GridFunction g = f - convolveLocalizer(psi, f);
  return applyPV(k, g, eps);
}

std::vector<double> ErrorKernelResult::shellIncrements() const {
  std::vector<double> inc;
  for (std::size_t i = 0; i < shellProfile.size(); ++i) {
    double prev = i == 0 ? 0.0 : shellProfile[i - 1].second;
    inc.push_back(shellProfile[i].second - prev);
  }
  return inc;
}

bool ErrorKernelResult::tailDecays(double factor, int window) const {
  std::vector<double> inc = shellIncrements();
  if (inc.size() < 2) return true;
  double floor = 1e-14 * (1.0 + l1Norm);
  std::size_t first =
      inc.size() > std::size_t(window) ? inc.size() - window - 1 : 0;
  for (std::size_t i = first; i + 1 < inc.size(); ++i) {
    if (inc[i + 1] <= floor) continue;
    if (inc[i + 1] > factor * inc[i]) return false;
  }
  return true;
}

ErrorKernelResult errorKernelStar(const ConvolutionKernel& k,
                                  const Localizer& eta, const Localizer& psi,
                                  const Grid& grid,
                                  std::vector<double> epsList) {
  if (grid.dim != k.dim || eta.dim != k.dim || psi.dim != k.dim)
    throw std::invalid_argument("errorKernelStar: dimension mismatch");
  const double h = grid.spacing();
  if (epsList.empty())
    for (double e = h; e <= 1.0; e *= 2.0) epsList.push_back(e);
  for (double e : epsList)
    if (e < 0.5 * h)
      throw std::invalid_argument("errorKernelStar: eps below h/2");

  ErrorKernelResult res;
  res.epsList = epsList;
  res.kStar = GridFunction(grid);
  const int n = grid.pointsPerAxis;

  if (grid.dim == 1) {
    // z grid covers [-2L, 2L]; differences x_i - z_l = L + (i - l) h.
    const int zn = 2 * n;
    std::vector<double> kz(static_cast<std::size_t>(zn));
    std::vector<double> zAbs(static_cast<std::size_t>(zn));
    for (int l = 0; l < zn; ++l) {
      double z = -2.0 * grid.halfWidth + (l + 0.5) * h;
      zAbs[std::size_t(l)] = std::abs(z);
      kz[std::size_t(l)] = k.evaluator(Point{z, 0.0});
    }
    std::vector<double> psid(static_cast<std::size_t>(n + zn - 1));
    for (int m = 0; m < n + zn - 1; ++m)
      psid[std::size_t(m)] =
          psi.evaluator(Point{grid.halfWidth + double(m - (zn - 1)) * h, 0.0});

    std::vector<double> conv(static_cast<std::size_t>(n));
    for (double eps : epsList) {
      parallelFor(std::size_t(n), [&](std::size_t i) {
        double acc = 0.0;
        for (int l = 0; l < zn; ++l) {
          if (zAbs[std::size_t(l)] < eps) continue;
          acc += kz[std::size_t(l)] * psid[i - std::size_t(l) + std::size_t(zn) - 1];
        }
        conv[i] = acc * h;
      });
      for (int i = 0; i < n; ++i) {
        Point x = grid.point(std::size_t(i));
        double local = 0.0;
        if (std::abs(x[0]) >= eps) {
          double kv = k.evaluator(x);
          local = kv * eta.evaluator(x) - kv;
        }
        double cand = std::abs(local + conv[std::size_t(i)]);
        if (cand > res.kStar.values[std::size_t(i)])
          res.kStar.values[std::size_t(i)] = cand;
      }
    }
  } else {
    // Dimension 2 keeps the same doubled-box quadrature; quadratic cost in
    // the cell count, intended for small grids.
    const int zn = 2 * n;
    std::vector<double> kz(std::size_t(zn) * zn);
    std::vector<double> zr(std::size_t(zn) * zn);
    auto zCoord = [&](int l) { return -2.0 * grid.halfWidth + (l + 0.5) * h; };
    for (int a = 0; a < zn; ++a)
      for (int b = 0; b < zn; ++b) {
        Point z{zCoord(a), zCoord(b)};
        kz[std::size_t(a) * zn + b] = k.evaluator(z);
        zr[std::size_t(a) * zn + b] = norm2(z);
      }
    for (double eps : epsList) {
      GridFunction conv(grid);
      parallelFor(grid.cellCount(), [&](std::size_t i) {
        Point x = grid.point(i);
        double acc = 0.0;
        for (int a = 0; a < zn; ++a)
          for (int b = 0; b < zn; ++b) {
            std::size_t zi = std::size_t(a) * zn + b;
            if (zr[zi] < eps) continue;
            acc += kz[zi] *
                   psi.evaluator(Point{x[0] - zCoord(a), x[1] - zCoord(b)});
          }
        conv.values[i] = acc * h * h;
      });
      for (std::size_t i = 0; i < grid.cellCount(); ++i) {
        Point x = grid.point(i);
        double local = 0.0;
        if (norm2(x) >= eps) {
          double kv = k.evaluator(x);
          local = kv * eta.evaluator(x) - kv;
        }
        double cand = std::abs(local + conv.values[i]);
        if (cand > res.kStar.values[i]) res.kStar.values[i] = cand;
      }
    }
  }

  res.l1Norm = integrate(res.kStar);

  double corner = grid.halfWidth * (grid.dim == 1 ? 1.0 : std::sqrt(2.0));
  std::vector<double> radii;
  for (double r = 0.25; r < corner; r *= 2.0) radii.push_back(r);
  radii.push_back(corner);
  const double cellVol = grid.dim == 1 ? h : h * h;
  for (double r : radii) {
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.cellCount(); ++i) {
      Point x = grid.point(i);
      if (norm2(x) <= r) mass += res.kStar.values[i];
    }
    res.shellProfile.emplace_back(r, mass * cellVol);
  }
  return res;
}

GridFunction localRieszGoldberg(int component,
                                const std::function<double(const Point&)>& phi,
                                const GridFunction& f) {
  const Grid& g = f.grid;
  if (component < 1 || component > g.dim)
    throw std::invalid_argument("localRieszGoldberg: bad component");
  requirePaddingContract(f);
  const double base = M_PI / g.halfWidth;
  for (int d = 0; d < g.dim; ++d) {
    for (double s : {1.0, -1.0}) {
      Point xi{0.0, 0.0};
      xi[std::size_t(d)] = s * base;
      if (std::abs(phi(xi) - 1.0) > 1e-12)
        throw std::invalid_argument(
            "localRieszGoldberg: cutoff must equal 1 at the lowest nonzero "
            "frequencies");
    }
  }
  const int j = component - 1;
  Multiplier m = [phi, j](const Point& xi) -> std::complex<double> {
    double r = norm2(xi);
    if (r == 0.0) return {0.0, 0.0};
    double sym = xi[std::size_t(j)] / r;
    return std::complex<double>(0.0, (1.0 - phi(xi)) * sym);
  };
  return fourierMultiply(f, m);
}

GridFunction adjointApply(const ConvolutionKernel& k, const GridFunction& g,
                          double eps) {
  ConvolutionKernel reflected = k;
  auto ke = k.evaluator;
  reflected.evaluator = [ke](const Point& x) {
    return ke(Point{-x[0], -x[1]});
  };
  return applyPV(reflected, g, eps);
}

}  // namespace localsieve
